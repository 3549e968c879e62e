#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>
#include <vector>

#include "bundle.hpp"
#include "decodekit/error.hpp"
#include "decodekit/harness/pipeline.hpp"
#include "decodekit/version.hpp"
#include "json.hpp"

namespace decodekit::harness {

namespace {

using nlohmann::json;

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_csv_line(line));
  }
  return rows;
}

/// Numeric cells are shortened for the human document; the CSV/JSON bundle
/// keeps full precision.
std::string pretty_cell(const std::string& field) {
  if (field.empty()) return field;
  char* end = nullptr;
  const double value = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size()) return field;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

std::string markdown_table(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return "(empty)\n";
  std::string out;
  auto emit = [&](const std::vector<std::string>& fields, bool header) {
    out += "|";
    for (const auto& f : fields) {
      out += " " + (header ? f : pretty_cell(f)) + " |";
    }
    out += "\n";
  };
  emit(rows[0], true);
  out += "|";
  for (std::size_t i = 0; i < rows[0].size(); ++i) out += " --- |";
  out += "\n";
  for (std::size_t r = 1; r < rows.size(); ++r) emit(rows[r], false);
  if (rows.size() == 1) out += "\n(no rows)\n";
  return out;
}

std::string csv_section(const std::filesystem::path& file) {
  return markdown_table(parse_csv(read_text_file(file))) + "\n";
}

}  // namespace

std::filesystem::path run_report(const ExperimentConfig& config,
                                 const std::filesystem::path& analysis_dir) {
  // Completeness gate: name every missing section before rendering anything.
  std::vector<std::string> missing;
  for (const auto& [file, section] : bundle::kSections) {
    if (!std::filesystem::exists(analysis_dir / file)) {
      missing.push_back(std::string(section) + " (" + std::string(file) + ")");
    }
  }
  if (!missing.empty()) {
    std::string what = "analysis bundle incomplete, missing:";
    for (const auto& m : missing) what += " " + m + ";";
    raise(Errc::config, what);
  }

  const json meta =
      json::parse(read_text_file(analysis_dir / bundle::kMeta));
  const json rank_summary =
      json::parse(read_text_file(analysis_dir / bundle::kRankSummary));

  std::string md;
  md += "# Decoding strategy analysis\n\n";
  md += "- toolkit version: " + meta.at("toolkit_version").get<std::string>() +
        "\n";
  md += "- task: " + meta.at("task").get<std::string>() + "\n";
  md += "- seed: " + meta.at("seed").dump() + "\n";
  md += "- samples per input (K): " + meta.at("samples_per_input").dump() + "\n";
  md += "- permutation rounds: " + meta.at("permutation_rounds").dump() + "\n";
  md += "- quality metric: " +
        meta.at("quality_metric").get<std::string>() + "\n";
  md += "- decoders:";
  for (const auto& d : meta.at("decoders")) {
    md += " `" + d.get<std::string>() + "`";
  }
  md += "\n\n";

  md += "## 1. Significance tests (best decoder vs rest)\n\n";
  {
    const auto rows =
        parse_csv(read_text_file(analysis_dir / bundle::kSignificance));
    md += markdown_table(rows) + "\n";
    // Table-style annotation: how many decoders the best one beats.
    std::map<std::string, std::pair<std::string, int>> beaten;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() < 9) continue;
      auto& slot = beaten[rows[r][0]];
      slot.first = rows[r][1];
      if (rows[r][8] == "true") slot.second += 1;
    }
    for (const auto& [metric, info] : beaten) {
      md += "- " + metric + ": best `" + info.first + "` significantly beats " +
            std::to_string(info.second) + " decoder(s) at alpha 0.01\n";
    }
    md += "\n";
  }

  md += "## 2. Metric correlations\n\n";
  md += "### Sequence level (per generation)\n\n";
  md += csv_section(analysis_dir / bundle::kCorrSequence);
  md += "### Cell level (per input x decoder)\n\n";
  md += csv_section(analysis_dir / bundle::kCorrCell);
  md += "### Corpus level (per decoder)\n\n";
  md += csv_section(analysis_dir / bundle::kCorrCorpus);

  md += "## 3. Ancestral contrast\n\n";
  md += csv_section(analysis_dir / bundle::kAncestralContrast);

  md += "## 4. Group rank analysis\n\n";
  md += csv_section(analysis_dir / bundle::kRankHistogram);
  if (!rank_summary.at("deterministic_mean").is_null()) {
    md += "- mean best deterministic rank: " +
          rank_summary.at("deterministic_mean").dump() + "\n";
    md += "- mean best stochastic rank: " +
          rank_summary.at("stochastic_mean").dump() + "\n\n";
  }

  md += "## 5. Quality-probability curve\n\n";
  {
    const json doc = json::parse(
        read_text_file(analysis_dir / bundle::kQualityProbability));
    std::vector<std::vector<std::string>> rows{
        {"bin_center", "mean_quality", "count"}};
    for (const auto& p : doc.at("points")) {
      rows.push_back({p.at("bin_center").dump(), p.at("mean_quality").dump(),
                      p.at("count").dump()});
    }
    md += markdown_table(rows) + "\n";
  }

  md += "## 6. Quality-diversity points\n\n";
  {
    const json doc =
        json::parse(read_text_file(analysis_dir / bundle::kQualityDiversity));
    // Per-decoder summary; the full point set stays in the JSON bundle.
    std::map<std::string, std::pair<double, double>> sums;
    std::map<std::string, int> counts;
    for (const auto& p : doc.at("points")) {
      const auto d = p.at("decoder").get<std::string>();
      sums[d].first += p.at("diversity").get<double>();
      sums[d].second += p.at("quality").get<double>();
      counts[d] += 1;
    }
    std::vector<std::vector<std::string>> rows{
        {"decoder", "sets", "mean_diversity", "mean_quality"}};
    for (const auto& [d, s] : sums) {
      const double n = counts[d];
      rows.push_back({d, std::to_string(counts[d]),
                      format_double(s.first / n), format_double(s.second / n)});
    }
    md += markdown_table(rows) + "\n";
  }

  md += "## 7. Length bias\n\n";
  md += csv_section(analysis_dir / bundle::kLengthBias);

  md += "## 8. Repetition fractions\n\n";
  md += csv_section(analysis_dir / bundle::kRepetition);

  const auto& notes = meta.at("notes");
  if (!notes.empty()) {
    md += "## Notes\n\n";
    for (const auto& n : notes) {
      md += "- [" + n.at("section").get<std::string>() + "] " +
            n.at("note").get<std::string>() + "\n";
    }
  }

  const auto path = config.out_dir / "report.md";
  write_text_file(path, md);
  return path;
}

}  // namespace decodekit::harness
