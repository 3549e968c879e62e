#include "decodekit/harness/presets.hpp"

namespace decodekit::harness {

const std::vector<TaskPreset>& all_task_presets() {
  static const std::vector<TaskPreset> presets = {
      {TaskKind::mt, "mt", 256, Conditioning::context, {}},
      {TaskKind::summarization, "summarization", 150, Conditioning::context,
       {"quality", "accuracy"}},
      {TaskKind::dialogue, "dialogue", 300, Conditioning::prefix,
       {"adequacy", "naturalness"}},
      {TaskKind::story, "story", 1024, Conditioning::prefix,
       {"fluency", "naturalness"}},
      {TaskKind::unconditional, "unconditional", 512, Conditioning::none,
       {"fluency", "naturalness"}},
  };
  return presets;
}

TaskPreset task_preset(TaskKind kind) {
  for (const auto& p : all_task_presets()) {
    if (p.kind == kind) return p;
  }
  return all_task_presets().back();
}

std::optional<TaskKind> parse_task(std::string_view name) {
  for (const auto& p : all_task_presets()) {
    if (p.name == name) return p.kind;
  }
  return std::nullopt;
}

}  // namespace decodekit::harness
