#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "decodekit/analysis.hpp"
#include "decodekit/decoders.hpp"
#include "decodekit/harness/presets.hpp"

namespace decodekit::harness {

/**
 * One experiment: which task, model, corpus, decoders, and seed. Loadable
 * from a flat JSON config file; CLI flags override file values.
 */
struct ExperimentConfig {
  TaskPreset task = task_preset(TaskKind::unconditional);
  std::filesystem::path model_path;
  std::filesystem::path corpus_path;
  std::filesystem::path ratings_path;  // optional
  std::filesystem::path out_dir = ".";

  std::vector<decoders::DecoderConfig> decoder_configs;
  std::size_t samples_per_input = 10;  // K for stochastic decoders
  std::uint64_t seed = 0;
  int workers = 1;
  std::optional<std::size_t> max_len_override;

  // analysis settings
  std::optional<analysis::GroupingSpec> grouping;  // default derived by kind
  std::string quality_metric = "auto";  // auto | rating | bleu | rouge_l
  int permutation_rounds = 10000;

  std::size_t effective_max_len() const {
    return max_len_override.value_or(task.max_len);
  }

  /// Validates decoder uniqueness, K, worker count, and parameter ranges.
  /// Throws Errc::config on violations.
  void validate() const;
};

/// Reads a JSON config file. Unknown keys are rejected to catch typos.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Derived deterministic/stochastic/excluded sets for the decoders present.
analysis::GroupingSpec default_grouping(
    const std::vector<decoders::DecoderConfig>& configs);

}  // namespace decodekit::harness
