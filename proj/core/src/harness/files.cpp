#include "decodekit/harness/files.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "decodekit/error.hpp"
#include "json.hpp"

namespace decodekit::harness {

using nlohmann::json;

namespace {

std::vector<json> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io, "cannot open file: " + path.string());
  std::vector<json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      raise(Errc::format, path.string() + ":" + std::to_string(lineno) + ": " +
                              e.what());
    }
  }
  return rows;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) raise(Errc::io, "cannot write file: " + path.string());
  return out;
}

}  // namespace

std::vector<CorpusEntry> load_corpus(const std::filesystem::path& path) {
  std::vector<CorpusEntry> entries;
  std::set<std::string> ids;
  for (const auto& j : load_jsonl(path)) {
    CorpusEntry e;
    try {
      e.id = j.at("id").get<std::string>();
      if (j.contains("context")) e.context = j.at("context").get<std::string>();
      if (j.contains("reference")) {
        e.reference = j.at("reference").get<std::string>();
      }
    } catch (const json::exception& err) {
      raise(Errc::format, "bad corpus row: " + std::string(err.what()));
    }
    if (!ids.insert(e.id).second) {
      raise(Errc::format, "duplicate corpus id: " + e.id);
    }
    entries.push_back(std::move(e));
  }
  if (entries.empty()) raise(Errc::empty_corpus, "corpus file has no rows");
  return entries;
}

void save_generations(const std::vector<decoders::GenerationRecord>& records,
                      const lm::Vocabulary& vocab,
                      const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& rec : records) {
    json tokens = json::array();
    for (auto id : rec.tokens) tokens.push_back(vocab.token(id));
    const json j{{"id", rec.input_id},
                 {"decoder", rec.decoder},
                 {"sample_index", rec.sample_index},
                 {"tokens", std::move(tokens)},
                 {"text", rec.text},
                 {"log_prob", rec.log_prob},
                 {"norm_log_prob", rec.norm_log_prob},
                 {"truncated", rec.truncated}};
    out << j.dump() << '\n';
  }
}

std::vector<decoders::GenerationRecord> load_generations(
    const std::filesystem::path& path, const lm::Vocabulary& vocab) {
  std::vector<decoders::GenerationRecord> records;
  for (const auto& j : load_jsonl(path)) {
    decoders::GenerationRecord rec;
    try {
      rec.input_id = j.at("id").get<std::string>();
      rec.decoder = j.at("decoder").get<std::string>();
      rec.sample_index = j.at("sample_index").get<int>();
      for (const auto& tok : j.at("tokens")) {
        rec.tokens.push_back(vocab.id_of(tok.get<std::string>()));
      }
      rec.text = j.at("text").get<std::string>();
      rec.log_prob = j.at("log_prob").get<double>();
      rec.norm_log_prob = j.at("norm_log_prob").get<double>();
      rec.truncated = j.at("truncated").get<bool>();
    } catch (const json::exception& err) {
      raise(Errc::format, "bad generation row: " + std::string(err.what()));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<GenerationRow> load_generation_rows(
    const std::filesystem::path& path) {
  std::vector<GenerationRow> rows;
  for (const auto& j : load_jsonl(path)) {
    GenerationRow row;
    try {
      row.input_id = j.at("id").get<std::string>();
      row.decoder = j.at("decoder").get<std::string>();
      row.sample_index = j.at("sample_index").get<int>();
      row.tokens = j.at("tokens").get<std::vector<std::string>>();
      row.text = j.at("text").get<std::string>();
      row.log_prob = j.at("log_prob").get<double>();
      row.norm_log_prob = j.at("norm_log_prob").get<double>();
      row.truncated = j.at("truncated").get<bool>();
    } catch (const json::exception& err) {
      raise(Errc::format, "bad generation row: " + std::string(err.what()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void save_metric_rows(const std::vector<MetricRow>& rows,
                      const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& row : rows) {
    json j{{"input_id", row.input_id},
           {"decoder", row.decoder},
           {"metric", row.metric},
           {"scope", row.scope},
           {"value", row.value}};
    if (row.sample_index) j["sample_index"] = *row.sample_index;
    out << j.dump() << '\n';
  }
}

std::vector<MetricRow> load_metric_rows(const std::filesystem::path& path) {
  std::vector<MetricRow> rows;
  for (const auto& j : load_jsonl(path)) {
    MetricRow row;
    try {
      row.input_id = j.at("input_id").get<std::string>();
      row.decoder = j.at("decoder").get<std::string>();
      if (j.contains("sample_index")) {
        row.sample_index = j.at("sample_index").get<int>();
      }
      row.metric = j.at("metric").get<std::string>();
      row.scope = j.at("scope").get<std::string>();
      row.value = j.at("value").get<double>();
    } catch (const json::exception& err) {
      raise(Errc::format, "bad metric row: " + std::string(err.what()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void save_skip_rows(const std::vector<SkipRow>& rows,
                    const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& row : rows) {
    const json j{{"input_id", row.input_id},
                 {"decoder", row.decoder},
                 {"metric", row.metric},
                 {"scope", row.scope},
                 {"reason", row.reason}};
    out << j.dump() << '\n';
  }
}

std::vector<analysis::RatingRecord> load_ratings(
    const std::filesystem::path& path) {
  std::vector<analysis::RatingRecord> ratings;
  for (const auto& j : load_jsonl(path)) {
    analysis::RatingRecord r;
    try {
      r.input_id = j.at("input_id").get<std::string>();
      r.decoder = j.at("decoder").get<std::string>();
      r.criterion = j.at("criterion").get<std::string>();
      r.rater_id = j.at("rater").get<std::string>();
      r.score = j.at("score").get<int>();
    } catch (const json::exception& err) {
      raise(Errc::format, "bad rating row: " + std::string(err.what()));
    }
    ratings.push_back(std::move(r));
  }
  return ratings;
}

void save_ratings(const std::vector<analysis::RatingRecord>& ratings,
                  const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& r : ratings) {
    const json j{{"input_id", r.input_id},
                 {"decoder", r.decoder},
                 {"criterion", r.criterion},
                 {"rater", r.rater_id},
                 {"score", r.score}};
    out << j.dump() << '\n';
  }
}

void sort_records(std::vector<decoders::GenerationRecord>& records) {
  std::sort(records.begin(), records.end(),
            [](const decoders::GenerationRecord& a,
               const decoders::GenerationRecord& b) {
              return std::tie(a.input_id, a.decoder, a.sample_index) <
                     std::tie(b.input_id, b.decoder, b.sample_index);
            });
}

void sort_metric_rows(std::vector<MetricRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const MetricRow& a, const MetricRow& b) {
    const int sa = a.sample_index.value_or(-1);
    const int sb = b.sample_index.value_or(-1);
    return std::tie(a.input_id, a.decoder, a.scope, a.metric, sa) <
           std::tie(b.input_id, b.decoder, b.scope, b.metric, sb);
  });
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += "\"\"";
    else quoted.push_back(c);
  }
  quoted.push_back('"');
  return quoted;
}

std::string format_double(double value) {
  // Shortest representation that round-trips, matching the JSON writer.
  return json(value).dump();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& contents) {
  auto out = open_out(path);
  out << contents;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io, "cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace decodekit::harness
