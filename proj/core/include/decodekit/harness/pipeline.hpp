#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "decodekit/harness/config.hpp"
#include "decodekit/harness/files.hpp"

namespace decodekit::harness {

/**
 * Stage outputs inside config.out_dir:
 *   decode    -> generations.jsonl
 *   evaluate  -> metrics.jsonl, skips.jsonl
 *   analyze   -> analysis/ (eight-section bundle, see analyze.cpp)
 *   report    -> report.md
 *
 * Every stage is a pure function of its file inputs plus the config, and all
 * outputs are canonically sorted, so reruns and different worker counts are
 * byte-identical.
 */

std::filesystem::path run_decode(const ExperimentConfig& config);

std::filesystem::path run_evaluate(const ExperimentConfig& config,
                                   const std::filesystem::path& generations_path);

std::filesystem::path run_analyze(const ExperimentConfig& config,
                                  const std::filesystem::path& metrics_path);

/// Renders the bundle into a single summary document. Throws Errc::config
/// naming the missing sections when the bundle is incomplete.
std::filesystem::path run_report(const ExperimentConfig& config,
                                 const std::filesystem::path& analysis_dir);

/// Index-addressed parallel map: runs fn(0..count) on `workers` threads.
/// Results must be written to preallocated slots so scheduling cannot change
/// output content.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace decodekit::harness
