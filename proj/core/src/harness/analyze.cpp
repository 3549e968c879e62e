#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "bundle.hpp"
#include "decodekit/error.hpp"
#include "decodekit/harness/pipeline.hpp"
#include "decodekit/metrics.hpp"
#include "decodekit/version.hpp"
#include "json.hpp"

namespace decodekit::harness {

namespace {

using nlohmann::json;

using CellKey = std::pair<std::string, std::string>;  // (input_id, decoder)

/// Metric rows reorganized for the analyses.
struct Tables {
  // sequence scope: metric -> decoder -> input -> per-sample values
  std::map<std::string,
           std::map<std::string, std::map<std::string, std::vector<double>>>>
      sequence;
  // set scope: metric -> (set id, decoder) -> value
  std::map<std::string, std::map<CellKey, double>> set;
  std::set<std::string> decoders;
};

Tables build_tables(const std::vector<MetricRow>& rows) {
  Tables t;
  for (const auto& row : rows) {
    t.decoders.insert(row.decoder);
    if (row.scope == "sequence") {
      t.sequence[row.metric][row.decoder][row.input_id].push_back(row.value);
    } else if (row.scope == "set") {
      t.set[row.metric][{row.input_id, row.decoder}] = row.value;
    } else {
      raise(Errc::format, "unknown metric scope: " + row.scope);
    }
  }
  return t;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Per-input scalar per decoder for a quality metric: mean over samples for
/// sequence metrics, the cell value for set-scope metrics (ratings).
std::map<std::string, std::map<std::string, double>> per_input_scores(
    const Tables& t, const std::string& metric) {
  std::map<std::string, std::map<std::string, double>> scores;
  auto seq = t.sequence.find(metric);
  if (seq != t.sequence.end()) {
    for (const auto& [decoder, inputs] : seq->second) {
      for (const auto& [input, values] : inputs) {
        scores[decoder][input] = mean_of(values);
      }
    }
    return scores;
  }
  auto set = t.set.find(metric);
  if (set != t.set.end()) {
    for (const auto& [key, value] : set->second) {
      scores[key.second][key.first] = value;
    }
  }
  return scores;
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line.push_back(',');
    line += csv_escape(fields[i]);
  }
  line.push_back('\n');
  return line;
}

struct Note {
  std::string section;
  std::string text;
};

// -------------------------------------------------------------------------
// Section builders
// -------------------------------------------------------------------------

std::string significance_csv(const Tables& t, const ExperimentConfig& config,
                             std::vector<Note>& notes) {
  std::string out = csv_row({"metric", "best_decoder", "decoder", "mean_best",
                             "mean_decoder", "statistic", "p_value",
                             "p_adjusted", "significant"});
  const std::vector<std::string> quality_metrics = {"bleu", "rouge_l",
                                                    "rating_mean"};
  for (const auto& metric : quality_metrics) {
    const auto scores = per_input_scores(t, metric);
    if (scores.size() < 2) {
      if (!scores.empty()) {
        notes.push_back({"significance tests",
                         metric + ": fewer than two decoders, skipped"});
      }
      continue;
    }

    // Inputs common to every decoder keep the tests paired.
    std::set<std::string> common;
    bool first = true;
    for (const auto& [decoder, inputs] : scores) {
      std::set<std::string> ids;
      for (const auto& [id, _] : inputs) ids.insert(id);
      if (first) {
        common = std::move(ids);
        first = false;
      } else {
        std::set<std::string> both;
        std::set_intersection(common.begin(), common.end(), ids.begin(),
                              ids.end(), std::inserter(both, both.begin()));
        common = std::move(both);
      }
    }
    if (common.size() < 2) {
      notes.push_back({"significance tests",
                       metric + ": fewer than two common inputs, skipped"});
      continue;
    }

    std::string best;
    double best_mean = 0.0;
    std::map<std::string, std::vector<double>> vectors;
    for (const auto& [decoder, inputs] : scores) {
      std::vector<double> v;
      v.reserve(common.size());
      for (const auto& id : common) v.push_back(inputs.at(id));
      const double m = mean_of(v);
      if (best.empty() || m > best_mean) {
        best = decoder;
        best_mean = m;
      }
      vectors.emplace(decoder, std::move(v));
    }

    std::vector<std::string> others;
    std::vector<double> p_values;
    std::vector<double> stats;
    for (const auto& [decoder, v] : vectors) {
      if (decoder == best) continue;
      const auto seed =
          derive_seed(config.seed, metric, "significance:" + decoder, 0);
      p_values.push_back(analysis::permutation_test(
          vectors.at(best), v, config.permutation_rounds, seed));
      stats.push_back(mean_of(vectors.at(best)) - mean_of(v));
      others.push_back(decoder);
    }
    const auto adjusted = analysis::bonferroni(p_values);
    for (std::size_t i = 0; i < others.size(); ++i) {
      const bool significant = adjusted[i] < 0.01;
      out += csv_row({metric, best, others[i], format_double(best_mean),
                      format_double(mean_of(vectors.at(others[i]))),
                      format_double(stats[i]), format_double(p_values[i]),
                      format_double(adjusted[i]),
                      significant ? "true" : "false"});
    }
  }
  return out;
}

/// Pearson matrix over named variables; cells left empty when undefined.
std::string correlation_csv(
    const std::map<std::string, std::map<std::string, double>>& variables,
    std::vector<Note>& notes, const std::string& label) {
  std::vector<std::string> names;
  for (const auto& [name, _] : variables) names.push_back(name);

  std::string out;
  {
    std::vector<std::string> header{"metric"};
    header.insert(header.end(), names.begin(), names.end());
    out += csv_row(header);
  }
  if (names.empty()) {
    notes.push_back({"correlations", label + ": no observations"});
    return out;
  }

  for (const auto& a : names) {
    std::vector<std::string> fields{a};
    for (const auto& b : names) {
      // observations common to both variables
      std::vector<double> x, y;
      for (const auto& [key, va] : variables.at(a)) {
        auto it = variables.at(b).find(key);
        if (it == variables.at(b).end()) continue;
        x.push_back(va);
        y.push_back(it->second);
      }
      std::string cell;
      if (x.size() >= 2) {
        try {
          cell = format_double(analysis::pearson(x, y));
        } catch (const Error&) {
          // constant variable: leave the cell empty
        }
      }
      fields.push_back(cell);
    }
    out += csv_row(fields);
  }
  return out;
}

std::string ancestral_contrast_csv(const Tables& t, std::vector<Note>& notes) {
  std::string out = csv_row({"decoder", "metric", "r"});
  // The baseline is the plain ancestral decoder when configured.
  const std::string baseline = "ancestral";
  if (!t.decoders.count(baseline)) {
    notes.push_back(
        {"ancestral contrast", "no ancestral decoder in the run, skipped"});
    return out;
  }
  for (const auto& [metric, by_decoder] : t.sequence) {
    auto base_it = by_decoder.find(baseline);
    if (base_it == by_decoder.end()) continue;
    std::vector<double> base_values;
    for (const auto& [_, vs] : base_it->second) {
      base_values.insert(base_values.end(), vs.begin(), vs.end());
    }
    for (const auto& [decoder, inputs] : by_decoder) {
      if (decoder == baseline) continue;
      std::vector<double> values;
      for (const auto& [_, vs] : inputs) {
        values.insert(values.end(), vs.begin(), vs.end());
      }
      try {
        out += csv_row(
            {decoder, metric,
             format_double(analysis::ancestral_contrast(values, base_values))});
      } catch (const Error&) {
        notes.push_back({"ancestral contrast",
                         decoder + "/" + metric + ": constant values, skipped"});
      }
    }
  }
  return out;
}

std::string pick_quality_metric(const Tables& t,
                                const ExperimentConfig& config,
                                std::vector<Note>& notes) {
  std::string wanted = config.quality_metric;
  if (wanted == "rating") wanted = "rating_mean";
  if (wanted == "auto") {
    if (t.set.count("rating_mean")) return "rating_mean";
    if (t.sequence.count("bleu")) return "bleu";
    notes.push_back({"quality", "no quality metric available"});
    return "";
  }
  if (!t.set.count(wanted) && !t.sequence.count(wanted)) {
    raise(Errc::config, "quality metric '" + wanted + "' not in the report");
  }
  return wanted;
}

}  // namespace

std::filesystem::path run_analyze(const ExperimentConfig& config,
                                  const std::filesystem::path& metrics_path) {
  config.validate();
  const auto rows = load_metric_rows(metrics_path);
  const Tables t = build_tables(rows);

  analysis::GroupingSpec grouping;
  if (config.grouping) {
    grouping = *config.grouping;
    for (const auto* group :
         {&grouping.deterministic, &grouping.stochastic, &grouping.excluded}) {
      for (const auto& d : *group) {
        if (!t.decoders.count(d)) {
          raise(Errc::config,
                "grouping references decoder absent from the report: " + d);
        }
      }
    }
  } else if (!config.decoder_configs.empty()) {
    grouping = default_grouping(config.decoder_configs);
  } else {
    // Bare analyze run: derive the grouping from the labels in the report.
    std::vector<decoders::DecoderConfig> parsed;
    for (const auto& label : t.decoders) {
      parsed.push_back(decoders::DecoderConfig::parse(label));
    }
    grouping = default_grouping(parsed);
  }

  const auto dir = config.out_dir / "analysis";
  std::filesystem::create_directories(dir);
  std::vector<Note> notes;

  // 1. permutation tests, best decoder against the rest
  write_text_file(dir / bundle::kSignificance,
                  significance_csv(t, config, notes));

  // 2. correlation matrices at the three granularities
  {
    // sequence level: observations are records
    std::map<std::string, std::map<std::string, double>> seq_vars;
    for (const auto& [metric, by_decoder] : t.sequence) {
      auto& var = seq_vars[metric];
      for (const auto& [decoder, inputs] : by_decoder) {
        for (const auto& [input, values] : inputs) {
          for (std::size_t s = 0; s < values.size(); ++s) {
            var[input + "\x1f" + decoder + "\x1f" + std::to_string(s)] =
                values[s];
          }
        }
      }
    }
    write_text_file(dir / bundle::kCorrSequence,
                    correlation_csv(seq_vars, notes, "sequence level"));

    // cell level: per-(input, decoder) set metrics and sequence means
    std::map<std::string, std::map<std::string, double>> cell_vars;
    for (const auto& [metric, cells] : t.set) {
      auto& var = cell_vars[metric];
      for (const auto& [key, value] : cells) {
        var[key.first + "\x1f" + key.second] = value;
      }
    }
    for (const auto& [metric, by_decoder] : t.sequence) {
      auto& var = cell_vars[metric];
      for (const auto& [decoder, inputs] : by_decoder) {
        for (const auto& [input, values] : inputs) {
          var[input + "\x1f" + decoder] = mean_of(values);
        }
      }
    }
    write_text_file(dir / bundle::kCorrCell,
                    correlation_csv(cell_vars, notes, "cell level"));

    // corpus level: one observation per decoder
    std::map<std::string, std::map<std::string, double>> corpus_vars;
    for (const auto& [metric, by_decoder] : t.sequence) {
      auto& var = corpus_vars[metric];
      for (const auto& [decoder, inputs] : by_decoder) {
        std::vector<double> all;
        for (const auto& [_, vs] : inputs) {
          all.insert(all.end(), vs.begin(), vs.end());
        }
        var[decoder] = mean_of(all);
      }
    }
    for (const auto& [metric, cells] : t.set) {
      std::map<std::string, std::vector<double>> per_decoder;
      for (const auto& [key, value] : cells) {
        per_decoder[key.second].push_back(value);
      }
      auto& var = corpus_vars[metric];
      for (const auto& [decoder, values] : per_decoder) {
        var[decoder] = mean_of(values);
      }
    }
    write_text_file(dir / bundle::kCorrCorpus,
                    correlation_csv(corpus_vars, notes, "corpus level"));
  }

  // 3. ancestral contrast
  write_text_file(dir / bundle::kAncestralContrast,
                  ancestral_contrast_csv(t, notes));

  // 4. rank groups from rating medians
  {
    std::vector<analysis::AggregatedRating> aggregated;
    for (const auto& [metric, cells] : t.set) {
      if (metric.rfind("rating_", 0) != 0 || metric == "rating_mean") continue;
      const std::string criterion = metric.substr(7);
      for (const auto& [key, value] : cells) {
        aggregated.push_back({key.first, key.second, criterion, value});
      }
    }
    std::string groups_csv = csv_row(
        {"input_id", "best_rank_deterministic", "best_rank_stochastic"});
    std::string hist_csv = csv_row({"group", "rank", "count"});
    json rank_meta{{"deterministic_mean", nullptr},
                   {"stochastic_mean", nullptr}};
    if (aggregated.empty()) {
      notes.push_back({"rank analysis", "no ratings supplied, skipped"});
    } else {
      const auto summary = analysis::rank_groups(aggregated, grouping);
      for (const auto& pi : summary.per_input) {
        groups_csv += csv_row({pi.input_id,
                               std::to_string(pi.best_deterministic),
                               std::to_string(pi.best_stochastic)});
      }
      for (const auto& [rank, count] : summary.deterministic_histogram) {
        hist_csv += csv_row(
            {"deterministic", std::to_string(rank), std::to_string(count)});
      }
      for (const auto& [rank, count] : summary.stochastic_histogram) {
        hist_csv += csv_row(
            {"stochastic", std::to_string(rank), std::to_string(count)});
      }
      rank_meta["deterministic_mean"] = summary.deterministic_mean;
      rank_meta["stochastic_mean"] = summary.stochastic_mean;
    }
    write_text_file(dir / bundle::kRankGroups, groups_csv);
    write_text_file(dir / bundle::kRankHistogram, hist_csv);
    write_text_file(dir / bundle::kRankSummary, rank_meta.dump(2) + "\n");
  }

  const std::string quality = pick_quality_metric(t, config, notes);

  // 5. quality-probability curve
  {
    json doc{{"quality_metric", quality}, {"points", json::array()}};
    if (!quality.empty() && t.sequence.count("norm_log_prob")) {
      // Per-record probability joined with per-record (or cell) quality.
      std::vector<std::pair<double, double>> records;
      const auto& nlp = t.sequence.at("norm_log_prob");
      const bool seq_quality = t.sequence.count(quality) != 0;
      for (const auto& [decoder, inputs] : nlp) {
        for (const auto& [input, values] : inputs) {
          for (std::size_t s = 0; s < values.size(); ++s) {
            double q = 0.0;
            bool have_q = false;
            if (seq_quality) {
              const auto& qt = t.sequence.at(quality);
              auto dit = qt.find(decoder);
              if (dit != qt.end()) {
                auto iit = dit->second.find(input);
                if (iit != dit->second.end() && s < iit->second.size()) {
                  q = iit->second[s];
                  have_q = true;
                }
              }
            } else {
              auto cit = t.set.at(quality).find({input, decoder});
              if (cit != t.set.at(quality).end()) {
                q = cit->second;
                have_q = true;
              }
            }
            if (have_q) records.emplace_back(values[s], q);
          }
        }
      }
      try {
        for (const auto& p : analysis::quality_probability_curve(records)) {
          doc["points"].push_back(json{{"bin_center", p.bin_center},
                                       {"mean_quality", p.mean_quality},
                                       {"count", p.count}});
        }
      } catch (const Error& e) {
        notes.push_back({"quality-probability curve", e.what()});
      }
    } else {
      notes.push_back(
          {"quality-probability curve", "no quality metric, curve empty"});
    }
    write_text_file(dir / bundle::kQualityProbability, doc.dump(2) + "\n");
  }

  // 6. quality-diversity points: per-set diversity joined with cell quality
  {
    json doc{{"quality_metric", quality}, {"points", json::array()}};
    if (!quality.empty() && t.set.count("ngram_diversity")) {
      std::map<CellKey, double> diversity;
      std::map<CellKey, double> cell_quality;
      const bool seq_quality = t.sequence.count(quality) != 0;
      for (const auto& [key, value] : t.set.at("ngram_diversity")) {
        double q = 0.0;
        bool have_q = false;
        if (seq_quality) {
          auto dit = t.sequence.at(quality).find(key.second);
          if (dit != t.sequence.at(quality).end()) {
            auto iit = dit->second.find(key.first);
            if (iit != dit->second.end()) {
              q = mean_of(iit->second);
              have_q = true;
            }
          }
        } else {
          auto cit = t.set.at(quality).find(key);
          if (cit != t.set.at(quality).end()) {
            q = cit->second;
            have_q = true;
          }
        }
        if (have_q) {
          diversity.emplace(key, value);
          cell_quality.emplace(key, q);
        }
      }
      if (diversity.empty()) {
        notes.push_back({"quality-diversity points",
                         "no sets with joinable quality values"});
      } else {
        for (const auto& p :
             analysis::quality_diversity_points(diversity, cell_quality)) {
          doc["points"].push_back(json{{"input_id", p.input_id},
                                       {"decoder", p.decoder},
                                       {"diversity", p.diversity},
                                       {"quality", p.quality}});
        }
      }
    } else {
      notes.push_back(
          {"quality-diversity points", "no per-set diversity or quality"});
    }
    write_text_file(dir / bundle::kQualityDiversity, doc.dump(2) + "\n");
  }

  // 7. length bias per decoder
  {
    std::string csv = csv_row({"decoder", "n", "mape", "mpe"});
    if (t.sequence.count("length") && t.sequence.count("ref_length")) {
      const auto& lens = t.sequence.at("length");
      const auto& refs = t.sequence.at("ref_length");
      for (const auto& [decoder, inputs] : lens) {
        auto rit = refs.find(decoder);
        if (rit == refs.end()) continue;
        std::vector<std::size_t> g, r;
        for (const auto& [input, values] : inputs) {
          auto iit = rit->second.find(input);
          if (iit == rit->second.end()) continue;
          for (std::size_t s = 0; s < values.size() && s < iit->second.size();
               ++s) {
            g.push_back(static_cast<std::size_t>(values[s]));
            r.push_back(static_cast<std::size_t>(iit->second[s]));
          }
        }
        if (g.empty()) continue;
        const auto errors = metrics::length_errors(g, r);
        csv += csv_row({decoder, std::to_string(g.size()),
                        format_double(errors.mape), format_double(errors.mpe)});
      }
    } else {
      notes.push_back({"length bias", "no reference lengths, table empty"});
    }
    write_text_file(dir / bundle::kLengthBias, csv);
  }

  // 8. repetition fraction per decoder
  {
    std::string csv = csv_row({"decoder", "n", "fraction"});
    if (t.sequence.count("repetition")) {
      for (const auto& [decoder, inputs] : t.sequence.at("repetition")) {
        std::vector<double> all;
        for (const auto& [_, vs] : inputs) {
          all.insert(all.end(), vs.begin(), vs.end());
        }
        csv += csv_row({decoder, std::to_string(all.size()),
                        format_double(mean_of(all))});
      }
    }
    write_text_file(dir / bundle::kRepetition, csv);
  }

  // metadata: config echo (no paths or worker counts, which may differ
  // between byte-identical runs), notes, toolkit version
  {
    json decoders_json = json::array();
    if (!config.decoder_configs.empty()) {
      for (const auto& d : config.decoder_configs) {
        decoders_json.push_back(d.label());
      }
    } else {
      for (const auto& label : t.decoders) decoders_json.push_back(label);
    }
    json grouping_json{
        {"deterministic", grouping.deterministic},
        {"stochastic", grouping.stochastic},
        {"excluded", grouping.excluded},
    };
    json notes_json = json::array();
    for (const auto& n : notes) {
      notes_json.push_back(json{{"section", n.section}, {"note", n.text}});
    }
    const json meta{{"toolkit_version", kVersion},
                    {"task", config.task.name},
                    {"seed", config.seed},
                    {"samples_per_input", config.samples_per_input},
                    {"permutation_rounds", config.permutation_rounds},
                    {"quality_metric", quality},
                    {"decoders", std::move(decoders_json)},
                    {"grouping", std::move(grouping_json)},
                    {"notes", std::move(notes_json)}};
    write_text_file(dir / bundle::kMeta, meta.dump(2) + "\n");
  }

  return dir;
}

}  // namespace decodekit::harness
