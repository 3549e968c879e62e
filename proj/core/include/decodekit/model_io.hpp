#pragma once

#include <filesystem>
#include <memory>

#include "decodekit/ngram.hpp"
#include "decodekit/table_model.hpp"

namespace decodekit::lm {

// Versioned JSON documents:
//   n-gram: {version, order, smoothing_k, vocabulary, counts}
//   table:  {version, vocabulary, entries, default}
// Loading a document with an unknown version throws Errc::format.

void save_ngram(const NGramModel& model, const std::filesystem::path& path);
NGramModel load_ngram(const std::filesystem::path& path);

void save_table(const TableModel& model, const std::filesystem::path& path);
TableModel load_table(const std::filesystem::path& path);

/// Loads either document kind, dispatching on its fields.
std::unique_ptr<SequenceModel> load_model(const std::filesystem::path& path);

}  // namespace decodekit::lm
