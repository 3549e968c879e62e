#include "decodekit/decoders.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "decodekit/error.hpp"
#include "decodekit/scoring.hpp"

namespace decodekit::decoders {

namespace {

using lm::Context;
using lm::GenerationBudget;
using lm::SequenceModel;
using lm::TokenDistribution;
using lm::TokenId;

std::string num_str(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

void check_budget(const GenerationBudget& budget) {
  if (budget.max_len < 1) {
    raise(Errc::invalid_parameter, "budget max_len must be >= 1");
  }
}

GenerationRecord finish_record(const SequenceModel& model,
                               std::vector<TokenId> tokens, double log_prob,
                               bool truncated) {
  GenerationRecord rec;
  rec.text = model.vocab().render(tokens);
  rec.tokens = std::move(tokens);
  rec.log_prob = log_prob;
  rec.norm_log_prob =
      log_prob / static_cast<double>(rec.tokens.size() - 1);
  rec.truncated = truncated;
  return rec;
}

/// Partial hypothesis under the raw score sum(ln p).
struct Hypothesis {
  std::vector<TokenId> tokens;
  double score = 0.0;
};

bool better_hypothesis(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

std::vector<Hypothesis> expand_all(const SequenceModel& model,
                                   const Context& context,
                                   const std::vector<Hypothesis>& beam) {
  std::vector<Hypothesis> cands;
  for (const auto& hyp : beam) {
    const auto dist = model.next(context, hyp.tokens);
    for (std::size_t id = 0; id < dist.size(); ++id) {
      const double p = dist.probs[id];
      if (p <= 0.0) continue;
      Hypothesis cand;
      cand.tokens = hyp.tokens;
      cand.tokens.push_back(static_cast<TokenId>(id));
      cand.score = hyp.score + std::log(p);
      cands.push_back(std::move(cand));
    }
  }
  return cands;
}

/// Completed pool + best incomplete fill, ranked on raw score with
/// lexicographic tie-break, capped at `width` records.
std::vector<GenerationRecord> finalize_beam(const SequenceModel& model,
                                            std::vector<Hypothesis> pool,
                                            const std::vector<Hypothesis>& beam,
                                            int width) {
  struct Final {
    Hypothesis hyp;
    bool truncated;
  };
  std::vector<Final> finals;
  finals.reserve(pool.size() + beam.size());
  for (auto& h : pool) finals.push_back({std::move(h), false});
  if (finals.size() < static_cast<std::size_t>(width)) {
    std::vector<Hypothesis> fill = beam;
    std::sort(fill.begin(), fill.end(), better_hypothesis);
    for (auto& h : fill) {
      if (finals.size() >= static_cast<std::size_t>(width)) break;
      finals.push_back({std::move(h), true});
    }
  }
  std::sort(finals.begin(), finals.end(), [](const Final& a, const Final& b) {
    return better_hypothesis(a.hyp, b.hyp);
  });
  if (finals.size() > static_cast<std::size_t>(width)) finals.resize(width);

  std::vector<GenerationRecord> records;
  records.reserve(finals.size());
  for (std::size_t i = 0; i < finals.size(); ++i) {
    auto rec = finish_record(model, std::move(finals[i].hyp.tokens),
                             finals[i].hyp.score, finals[i].truncated);
    rec.sample_index = static_cast<int>(i);
    records.push_back(std::move(rec));
  }
  return records;
}

/// One beam of width `width` with its completed pool; shared by plain beam
/// search (one group) and DBS (one instance per group).
struct BeamState {
  std::vector<Hypothesis> beam;
  std::vector<Hypothesis> pool;

  explicit BeamState(TokenId bos) { beam.push_back({{bos}, 0.0}); }

  bool done(int width) const {
    return beam.empty() || pool.size() >= static_cast<std::size_t>(width);
  }

  /// Selects from sorted candidates: EOS hypotheses ranked above the
  /// width-th surviving one move to the pool, the rest refill the beam.
  /// On the final budgeted step every EOS extension is pooled, since the
  /// beam cannot be extended further and would otherwise shadow terminated
  /// candidates it can no longer beat.
  /// Returns the tokens selected at this step (for the DBS penalty).
  std::vector<TokenId> select(std::vector<Hypothesis> sorted_cands, int width,
                              TokenId eos, bool final_step) {
    std::vector<TokenId> chosen;
    std::vector<Hypothesis> next_beam;
    for (auto& cand : sorted_cands) {
      const bool beam_full =
          next_beam.size() >= static_cast<std::size_t>(width);
      if (beam_full && !final_step) break;
      const TokenId tok = cand.tokens.back();
      if (tok == eos) {
        chosen.push_back(tok);
        pool.push_back(std::move(cand));
      } else if (!beam_full) {
        chosen.push_back(tok);
        next_beam.push_back(std::move(cand));
      }
    }
    beam = std::move(next_beam);
    return chosen;
  }
};

}  // namespace

bool is_deterministic(DecoderKind kind) {
  return kind == DecoderKind::greedy || kind == DecoderKind::beam ||
         kind == DecoderKind::diverse_beam;
}

bool is_beam_kind(DecoderKind kind) {
  return kind == DecoderKind::beam || kind == DecoderKind::diverse_beam;
}

bool is_stochastic(DecoderKind kind) {
  return kind == DecoderKind::ancestral || kind == DecoderKind::top_k ||
         kind == DecoderKind::top_p;
}

std::string DecoderConfig::label() const {
  std::string base;
  switch (kind) {
    case DecoderKind::greedy:
      return "greedy";
    case DecoderKind::beam:
      return "beam:k=" + std::to_string(beam_k);
    case DecoderKind::diverse_beam:
      return "diverse_beam:k=" + std::to_string(beam_k) +
             ",G=" + std::to_string(groups) + ",lambda=" + num_str(lambda);
    case DecoderKind::ancestral:
      base = "ancestral";
      break;
    case DecoderKind::top_k:
      base = "top_k:k=" + std::to_string(top_k);
      break;
    case DecoderKind::top_p:
      base = "top_p:p=" + num_str(top_p);
      break;
    case DecoderKind::mbr:
      base = "mbr:n=" + std::to_string(mbr_samples);
      break;
  }
  if (seed) {
    base += base.find(':') == std::string::npos ? ':' : ',';
    base += "seed=" + std::to_string(*seed);
  }
  return base;
}

DecoderConfig DecoderConfig::parse(std::string_view spec) {
  const auto colon = spec.find(':');
  const std::string kind_str(spec.substr(0, colon));
  DecoderConfig cfg;
  if (kind_str == "greedy") {
    cfg.kind = DecoderKind::greedy;
  } else if (kind_str == "beam") {
    cfg.kind = DecoderKind::beam;
  } else if (kind_str == "diverse_beam" || kind_str == "dbs") {
    cfg.kind = DecoderKind::diverse_beam;
  } else if (kind_str == "ancestral") {
    cfg.kind = DecoderKind::ancestral;
  } else if (kind_str == "top_k") {
    cfg.kind = DecoderKind::top_k;
  } else if (kind_str == "top_p") {
    cfg.kind = DecoderKind::top_p;
  } else if (kind_str == "mbr") {
    cfg.kind = DecoderKind::mbr;
  } else {
    raise(Errc::config, "unknown decoder kind: " + kind_str);
  }

  if (colon == std::string_view::npos) return cfg;
  std::string_view rest = spec.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string_view part = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{}
                                           : rest.substr(comma + 1);
    const auto eq = part.find('=');
    if (eq == std::string_view::npos) {
      raise(Errc::config, "decoder option is not key=value: " + std::string(part));
    }
    const std::string key(part.substr(0, eq));
    const std::string value(part.substr(eq + 1));
    std::size_t used = 0;
    try {
      if (key == "k" && cfg.kind == DecoderKind::top_k) {
        cfg.top_k = std::stoi(value, &used);
      } else if (key == "k" && is_beam_kind(cfg.kind)) {
        cfg.beam_k = std::stoi(value, &used);
      } else if (key == "G" && cfg.kind == DecoderKind::diverse_beam) {
        cfg.groups = std::stoi(value, &used);
      } else if (key == "lambda" && cfg.kind == DecoderKind::diverse_beam) {
        cfg.lambda = std::stod(value, &used);
      } else if (key == "p" && cfg.kind == DecoderKind::top_p) {
        cfg.top_p = std::stod(value, &used);
      } else if (key == "n" && cfg.kind == DecoderKind::mbr) {
        cfg.mbr_samples = std::stoi(value, &used);
      } else if (key == "seed" && (is_stochastic(cfg.kind) ||
                                   cfg.kind == DecoderKind::mbr)) {
        cfg.seed = std::stoull(value, &used);
      } else {
        raise(Errc::config,
              "option '" + key + "' not valid for decoder " + kind_str);
      }
    } catch (const std::invalid_argument&) {
      raise(Errc::config, "bad numeric value: " + value);
    } catch (const std::out_of_range&) {
      raise(Errc::config, "numeric value out of range: " + value);
    }
    if (used != value.size()) {
      raise(Errc::config, "bad numeric value: " + value);
    }
  }
  return cfg;
}

TokenDistribution truncate_top_k(const TokenDistribution& dist, int k) {
  if (k < 1) raise(Errc::invalid_parameter, "top-k needs k >= 1");
  const std::size_t keep =
      std::min(static_cast<std::size_t>(k), dist.size());

  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dist.probs[a] != dist.probs[b]) return dist.probs[a] > dist.probs[b];
    return a < b;
  });

  double kept_mass = 0.0;
  for (std::size_t i = 0; i < keep; ++i) kept_mass += dist.probs[order[i]];

  TokenDistribution out;
  out.probs.assign(dist.size(), 0.0);
  for (std::size_t i = 0; i < keep; ++i) {
    out.probs[order[i]] = dist.probs[order[i]] / kept_mass;
  }
  return out;
}

TokenDistribution truncate_top_p(const TokenDistribution& dist, double p) {
  if (!(p > 0.0) || p > 1.0) {
    raise(Errc::invalid_parameter, "top-p needs p in (0,1]");
  }

  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dist.probs[a] != dist.probs[b]) return dist.probs[a] > dist.probs[b];
    return a < b;
  });

  double kept_mass = 0.0;
  std::size_t keep = 0;
  for (; keep < order.size(); ++keep) {
    kept_mass += dist.probs[order[keep]];
    if (kept_mass >= p) {
      ++keep;
      break;
    }
  }
  // A sum slightly under p only happens through rounding on a full scan;
  // keep everything in that case.
  keep = std::min(keep, order.size());
  if (keep == 0) keep = order.size();

  TokenDistribution out;
  out.probs.assign(dist.size(), 0.0);
  for (std::size_t i = 0; i < keep; ++i) {
    out.probs[order[i]] = dist.probs[order[i]] / kept_mass;
  }
  return out;
}

GenerationRecord greedy_decode(const SequenceModel& model,
                               const Context& context,
                               const GenerationBudget& budget) {
  check_budget(budget);
  const TokenId eos = model.vocab().eos_id();
  std::vector<TokenId> path{model.vocab().bos_id()};
  double log_prob = 0.0;
  bool terminated = false;
  while (path.size() - 1 < budget.max_len) {
    const auto dist = model.next(context, path);
    const TokenId choice = dist.argmax();
    log_prob += std::log(dist[choice]);
    path.push_back(choice);
    if (choice == eos) {
      terminated = true;
      break;
    }
  }
  return finish_record(model, std::move(path), log_prob, !terminated);
}

DecodeOutput beam_decode(const SequenceModel& model, const Context& context,
                         int beam_k, const GenerationBudget& budget) {
  check_budget(budget);
  if (beam_k < 1) raise(Errc::invalid_parameter, "beam_k must be >= 1");

  const TokenId eos = model.vocab().eos_id();
  BeamState state(model.vocab().bos_id());
  for (std::size_t t = 0; t < budget.max_len && !state.done(beam_k); ++t) {
    auto cands = expand_all(model, context, state.beam);
    std::sort(cands.begin(), cands.end(), better_hypothesis);
    state.select(std::move(cands), beam_k, eos, t + 1 == budget.max_len);
  }
  return DecodeOutput{
      finalize_beam(model, std::move(state.pool), state.beam, beam_k)};
}

DecodeOutput diverse_beam_decode(const SequenceModel& model,
                                 const Context& context, int beam_k,
                                 int groups_G, double lambda,
                                 const GenerationBudget& budget) {
  check_budget(budget);
  if (beam_k < 1) raise(Errc::invalid_parameter, "beam_k must be >= 1");
  if (groups_G < 1 || beam_k % groups_G != 0) {
    raise(Errc::invalid_parameter, "groups_G must divide beam_k");
  }
  if (lambda < 0.0) raise(Errc::invalid_parameter, "lambda must be >= 0");

  const int group_width = beam_k / groups_G;
  const TokenId eos = model.vocab().eos_id();
  std::vector<BeamState> groups(static_cast<std::size_t>(groups_G),
                                BeamState(model.vocab().bos_id()));

  for (std::size_t t = 0; t < budget.max_len; ++t) {
    bool any_active = false;
    // Tokens already chosen at this time step by earlier groups.
    std::map<TokenId, int> step_counts;
    for (auto& group : groups) {
      if (group.done(group_width)) continue;
      any_active = true;

      auto cands = expand_all(model, context, group.beam);
      // Augmented score: raw minus lambda per same-token pick in earlier
      // groups. The penalty steers selection only; stored scores stay raw.
      std::vector<double> augmented(cands.size());
      for (std::size_t i = 0; i < cands.size(); ++i) {
        const TokenId tok = cands[i].tokens.back();
        const auto hit = step_counts.find(tok);
        const int clashes = hit == step_counts.end() ? 0 : hit->second;
        augmented[i] = cands[i].score - lambda * clashes;
      }
      std::vector<std::size_t> order(cands.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (augmented[a] != augmented[b]) return augmented[a] > augmented[b];
        return cands[a].tokens < cands[b].tokens;
      });
      std::vector<Hypothesis> sorted;
      sorted.reserve(cands.size());
      for (std::size_t idx : order) sorted.push_back(std::move(cands[idx]));

      for (TokenId tok : group.select(std::move(sorted), group_width, eos,
                                      t + 1 == budget.max_len)) {
        step_counts[tok] += 1;
      }
    }
    if (!any_active) break;
  }

  std::vector<GenerationRecord> all;
  for (auto& group : groups) {
    auto recs =
        finalize_beam(model, std::move(group.pool), group.beam, group_width);
    all.insert(all.end(), std::make_move_iterator(recs.begin()),
               std::make_move_iterator(recs.end()));
  }
  std::sort(all.begin(), all.end(),
            [](const GenerationRecord& a, const GenerationRecord& b) {
              if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
              return a.tokens < b.tokens;
            });
  for (std::size_t i = 0; i < all.size(); ++i) {
    all[i].sample_index = static_cast<int>(i);
  }
  return DecodeOutput{std::move(all)};
}

namespace {

GenerationRecord sample_impl(const SequenceModel& model, const Context& context,
                             const GenerationBudget& budget, RngStream& rng,
                             const Truncation* truncation) {
  check_budget(budget);
  const TokenId eos = model.vocab().eos_id();
  std::vector<TokenId> path{model.vocab().bos_id()};
  double log_prob = 0.0;
  bool terminated = false;
  while (path.size() - 1 < budget.max_len) {
    const auto dist = model.next(context, path);
    TokenId choice;
    if (truncation == nullptr) {
      choice = lm::sample_token(dist, rng);
    } else if (truncation->kind == Truncation::Kind::top_k) {
      choice = lm::sample_token(truncate_top_k(dist, truncation->k), rng);
    } else {
      choice = lm::sample_token(truncate_top_p(dist, truncation->p), rng);
    }
    // Scored under the model distribution even when sampling from the
    // truncated proposal.
    log_prob += std::log(dist[choice]);
    path.push_back(choice);
    if (choice == eos) {
      terminated = true;
      break;
    }
  }
  return finish_record(model, std::move(path), log_prob, !terminated);
}

}  // namespace

GenerationRecord ancestral_sample(const SequenceModel& model,
                                  const Context& context,
                                  const GenerationBudget& budget,
                                  RngStream& rng) {
  return sample_impl(model, context, budget, rng, nullptr);
}

GenerationRecord truncated_sample(const SequenceModel& model,
                                  const Context& context,
                                  const GenerationBudget& budget,
                                  RngStream& rng,
                                  const Truncation& truncation) {
  return sample_impl(model, context, budget, rng, &truncation);
}

GenerationRecord mbr_decode(
    const SequenceModel& model, const Context& context,
    const GenerationBudget& budget, int mbr_samples, const Utility& utility,
    const std::vector<std::vector<TokenId>>& extra_candidates,
    RngStream& rng) {
  check_budget(budget);
  if (mbr_samples < 1) {
    raise(Errc::invalid_parameter, "mbr_samples must be >= 1");
  }
  if (!utility) raise(Errc::invalid_parameter, "mbr utility is empty");

  std::vector<GenerationRecord> samples;
  samples.reserve(static_cast<std::size_t>(mbr_samples));
  for (int i = 0; i < mbr_samples; ++i) {
    samples.push_back(ancestral_sample(model, context, budget, rng));
  }

  // Candidate pool: the samples plus external candidates, deduplicated on
  // the token path. External candidates are rescored through the model.
  std::map<std::vector<TokenId>, double> pool;
  for (const auto& s : samples) pool.emplace(s.tokens, s.log_prob);
  for (const auto& tokens : extra_candidates) {
    if (pool.count(tokens) != 0) continue;
    pool.emplace(tokens, lm::sequence_log_prob(model, context, tokens));
  }

  const auto& vocab = model.vocab();
  std::vector<std::span<const TokenId>> sample_contents;
  sample_contents.reserve(samples.size());
  for (const auto& s : samples) {
    sample_contents.push_back(content_span(s.tokens, vocab));
  }

  const std::vector<TokenId>* best_tokens = nullptr;
  double best_utility = 0.0;
  double best_log_prob = 0.0;
  for (const auto& [tokens, log_prob] : pool) {
    const auto cand_content = content_span(tokens, vocab);
    double total = 0.0;
    for (const auto& sc : sample_contents) total += utility(cand_content, sc);
    const double expected = total / static_cast<double>(mbr_samples);

    bool take = best_tokens == nullptr;
    if (!take && expected != best_utility) take = expected > best_utility;
    if (!take && expected == best_utility) {
      if (log_prob != best_log_prob) {
        take = log_prob > best_log_prob;
      } else {
        take = tokens < *best_tokens;
      }
    }
    if (take) {
      best_tokens = &tokens;
      best_utility = expected;
      best_log_prob = log_prob;
    }
  }

  std::vector<TokenId> winner = *best_tokens;
  const bool truncated = winner.back() != vocab.eos_id();
  auto rec = finish_record(model, std::move(winner), best_log_prob, truncated);
  rec.sample_index = 0;
  return rec;
}

std::span<const TokenId> content_span(std::span<const TokenId> tokens,
                                      const lm::Vocabulary& vocab) {
  std::size_t begin = 0;
  std::size_t end = tokens.size();
  if (begin < end && tokens[begin] == vocab.bos_id()) ++begin;
  if (end > begin && tokens[end - 1] == vocab.eos_id()) --end;
  return tokens.subspan(begin, end - begin);
}

}  // namespace decodekit::decoders
