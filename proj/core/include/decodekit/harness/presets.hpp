#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace decodekit::harness {

enum class TaskKind { mt, summarization, dialogue, story, unconditional };

enum class Conditioning {
  context,  // encoder-style input
  prefix,   // prompt is the start of the output sequence
  none,     // unconditional
};

/**
 * Built-in task presets: generation cap, conditioning mode, and the human
 * rating criteria admissible for the task.
 */
struct TaskPreset {
  TaskKind kind = TaskKind::unconditional;
  std::string name;
  std::size_t max_len = 512;
  Conditioning conditioning = Conditioning::none;
  std::vector<std::string> criteria;

  bool conditional() const noexcept {
    return conditioning != Conditioning::none;
  }
};

TaskPreset task_preset(TaskKind kind);
std::optional<TaskKind> parse_task(std::string_view name);
const std::vector<TaskPreset>& all_task_presets();

}  // namespace decodekit::harness
