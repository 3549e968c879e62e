#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "decodekit/analysis.hpp"
#include "decodekit/decoders.hpp"

namespace decodekit::harness {

/// One corpus row: {id, context?, reference?} in JSON-lines.
struct CorpusEntry {
  std::string id;
  std::optional<std::string> context;
  std::optional<std::string> reference;
};

std::vector<CorpusEntry> load_corpus(const std::filesystem::path& path);

// Generations JSON-lines:
//   {id, decoder, sample_index, tokens, text, log_prob, norm_log_prob, truncated}
void save_generations(const std::vector<decoders::GenerationRecord>& records,
                      const lm::Vocabulary& vocab,
                      const std::filesystem::path& path);
std::vector<decoders::GenerationRecord> load_generations(
    const std::filesystem::path& path, const lm::Vocabulary& vocab);

/// String-level view of a generations row; evaluation needs no model.
struct GenerationRow {
  std::string input_id;
  std::string decoder;
  int sample_index = 0;
  std::vector<std::string> tokens;  // includes <bos>/<eos> markers
  std::string text;
  double log_prob = 0.0;
  double norm_log_prob = 0.0;
  bool truncated = false;
};

std::vector<GenerationRow> load_generation_rows(
    const std::filesystem::path& path);

/// One metric value: scope "sequence" rows carry a sample_index, scope "set"
/// rows identify a measured set (for pooled protocols the input_id is the
/// synthetic subset id).
struct MetricRow {
  std::string input_id;
  std::string decoder;
  std::optional<int> sample_index;
  std::string metric;
  std::string scope;  // "sequence" | "set"
  double value = 0.0;
};

void save_metric_rows(const std::vector<MetricRow>& rows,
                      const std::filesystem::path& path);
std::vector<MetricRow> load_metric_rows(const std::filesystem::path& path);

/// Skipped-cell log so undefined metrics are itemized, never silently lost.
struct SkipRow {
  std::string input_id;
  std::string decoder;
  std::string metric;
  std::string scope;
  std::string reason;
};

void save_skip_rows(const std::vector<SkipRow>& rows,
                    const std::filesystem::path& path);

// Ratings JSON-lines: {input_id, decoder, criterion, rater, score}
std::vector<analysis::RatingRecord> load_ratings(
    const std::filesystem::path& path);
void save_ratings(const std::vector<analysis::RatingRecord>& ratings,
                  const std::filesystem::path& path);

/// Canonical ordering applied to every output file for diff-ability.
void sort_records(std::vector<decoders::GenerationRecord>& records);
void sort_metric_rows(std::vector<MetricRow>& rows);

/// Minimal CSV escaping: quotes fields containing separators or quotes.
std::string csv_escape(const std::string& field);
/// Shortest-round-trip double rendering shared by CSV and JSON writers.
std::string format_double(double value);

void write_text_file(const std::filesystem::path& path,
                     const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace decodekit::harness
