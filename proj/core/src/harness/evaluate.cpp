#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <set>

#include "decodekit/error.hpp"
#include "decodekit/harness/pipeline.hpp"
#include "decodekit/metrics.hpp"

namespace decodekit::harness {

namespace {

using metrics::Tokens;

Tokens content_of(const GenerationRow& row) {
  Tokens content;
  content.reserve(row.tokens.size());
  for (const auto& tok : row.tokens) {
    if (tok == lm::Vocabulary::kBosText || tok == lm::Vocabulary::kEosText) {
      continue;
    }
    content.push_back(tok);
  }
  return content;
}

struct CellRows {
  std::vector<MetricRow> rows;
  std::vector<SkipRow> skips;
};

CellRows sequence_metrics(const GenerationRow& row, const Tokens& content,
                          const Tokens* reference) {
  CellRows out;
  auto add = [&](const std::string& metric, double value) {
    out.rows.push_back({row.input_id, row.decoder, row.sample_index, metric,
                        "sequence", value});
  };

  add("norm_log_prob", row.norm_log_prob);
  add("perplexity", std::exp(-row.norm_log_prob));
  add("length", static_cast<double>(content.size()));
  add("repetition", metrics::detect_repetition(content).repeated ? 1.0 : 0.0);
  if (reference != nullptr) {
    add("bleu", metrics::sentence_bleu(content, {*reference}));
    add("rouge_l", metrics::rouge_l(content, *reference));
    add("ref_length", static_cast<double>(reference->size()));
  }
  return out;
}

CellRows set_metrics(const metrics::GenerationSet& set) {
  CellRows out;
  auto add = [&](const std::string& metric, double value) {
    out.rows.push_back(
        {set.input_id, set.decoder, std::nullopt, metric, "set", value});
  };
  auto skip = [&](const std::string& metric, const std::string& reason) {
    out.skips.push_back({set.input_id, set.decoder, metric, "set", reason});
  };

  const Tokens all = metrics::concat_members(set);
  for (std::size_t n = 1; n <= 5; ++n) {
    const std::string suffix = std::to_string(n);
    try {
      add("dist_" + suffix, metrics::dist_n(all, n));
    } catch (const Error&) {
      skip("dist_" + suffix, "fewer tokens than n");
    }
    try {
      add("ent_" + suffix, metrics::ent_n(all, n));
    } catch (const Error&) {
      skip("ent_" + suffix, "fewer tokens than n");
    }
  }
  try {
    add("ngram_diversity", metrics::ngram_diversity(all));
  } catch (const Error&) {
    skip("ngram_diversity", "undefined dist-n component");
  }
  if (set.members.size() >= 2) {
    add("self_bleu", metrics::self_bleu(set));
  } else {
    skip("self_bleu", "set has fewer than two members");
  }
  return out;
}

}  // namespace

std::filesystem::path run_evaluate(
    const ExperimentConfig& config,
    const std::filesystem::path& generations_path) {
  config.validate();
  const auto corpus = load_corpus(config.corpus_path);
  const auto rows = load_generation_rows(generations_path);

  std::map<std::string, Tokens> references;
  for (const auto& entry : corpus) {
    if (entry.reference) {
      references.emplace(entry.id, lm::tokenize(*entry.reference));
    }
  }

  std::set<std::pair<std::string, std::string>> cells_present;
  std::set<std::string> inputs_present;
  for (const auto& row : rows) {
    cells_present.insert({row.input_id, row.decoder});
    inputs_present.insert(row.input_id);
  }
  if (config.task.conditional()) {
    for (const auto& id : inputs_present) {
      if (!references.count(id)) {
        raise(Errc::config,
              "conditional task but no reference for input " + id);
      }
    }
  }

  // Per-record metrics, one slot per record so worker count cannot matter.
  std::vector<CellRows> seq_slots(rows.size());
  parallel_for(rows.size(), config.workers, [&](std::size_t i) {
    const auto content = content_of(rows[i]);
    const auto ref = references.find(rows[i].input_id);
    seq_slots[i] = sequence_metrics(
        rows[i], content, ref == references.end() ? nullptr : &ref->second);
  });

  // Set-level metrics under the task's protocol.
  std::vector<metrics::SetMember> members;
  members.reserve(rows.size());
  for (const auto& row : rows) {
    members.push_back(
        {row.input_id, row.decoder, row.sample_index, content_of(row)});
  }
  const auto protocol = config.task.kind == TaskKind::unconditional
                            ? metrics::SetProtocol::pooled
                            : metrics::SetProtocol::per_input;
  auto set_rng = derive_rng(config.seed, "", "metric-sets", 0);
  const auto sets = metrics::collect_metric_sets(
      members, protocol, config.samples_per_input, set_rng);

  std::vector<CellRows> set_slots(sets.size());
  parallel_for(sets.size(), config.workers, [&](std::size_t i) {
    set_slots[i] = set_metrics(sets[i]);
  });

  std::vector<MetricRow> metric_rows;
  std::vector<SkipRow> skip_rows;
  for (auto& slot : seq_slots) {
    metric_rows.insert(metric_rows.end(), slot.rows.begin(), slot.rows.end());
    skip_rows.insert(skip_rows.end(), slot.skips.begin(), slot.skips.end());
  }
  for (auto& slot : set_slots) {
    metric_rows.insert(metric_rows.end(), slot.rows.begin(), slot.rows.end());
    skip_rows.insert(skip_rows.end(), slot.skips.begin(), slot.skips.end());
  }

  // Human ratings, when supplied: per-criterion medians plus their mean.
  if (!config.ratings_path.empty()) {
    const auto ratings = load_ratings(config.ratings_path);
    const std::set<std::string> allowed(config.task.criteria.begin(),
                                        config.task.criteria.end());
    for (const auto& r : ratings) {
      if (!allowed.count(r.criterion)) {
        raise(Errc::config, "criterion '" + r.criterion +
                                "' not defined for task " + config.task.name);
      }
      if (!cells_present.count({r.input_id, r.decoder})) {
        raise(Errc::config, "rating references unknown cell (" + r.input_id +
                                ", " + r.decoder + ")");
      }
    }
    const auto aggregated = analysis::aggregate_ratings(ratings);
    std::map<std::pair<std::string, std::string>, std::pair<double, int>>
        mean_acc;
    for (const auto& a : aggregated) {
      metric_rows.push_back({a.input_id, a.decoder, std::nullopt,
                             "rating_" + a.criterion, "set", a.median_score});
      auto& acc = mean_acc[{a.input_id, a.decoder}];
      acc.first += a.median_score;
      acc.second += 1;
    }
    for (const auto& [key, acc] : mean_acc) {
      metric_rows.push_back({key.first, key.second, std::nullopt,
                             "rating_mean", "set", acc.first / acc.second});
    }
  }

  sort_metric_rows(metric_rows);
  std::sort(skip_rows.begin(), skip_rows.end(),
            [](const SkipRow& a, const SkipRow& b) {
              return std::tie(a.input_id, a.decoder, a.scope, a.metric) <
                     std::tie(b.input_id, b.decoder, b.scope, b.metric);
            });

  const auto path = config.out_dir / "metrics.jsonl";
  save_metric_rows(metric_rows, path);
  save_skip_rows(skip_rows, config.out_dir / "skips.jsonl");
  return path;
}

}  // namespace decodekit::harness
