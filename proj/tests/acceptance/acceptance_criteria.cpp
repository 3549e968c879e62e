// Acceptance suite: one check per release criterion, each printing a single
// PASS/FAIL line. Everything is pinned against exact oracles (enumeration,
// closed-form arithmetic, 2^n permutation enumeration) or directional
// statistics with bootstrap intervals on the self-contained reference LM.

#include "doctest.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "acceptance/synthetic_corpus.hpp"
#include "decodekit/analysis.hpp"
#include "decodekit/decoders.hpp"
#include "decodekit/harness/pipeline.hpp"
#include "decodekit/metrics.hpp"
#include "decodekit/model_io.hpp"
#include "decodekit/ngram.hpp"
#include "decodekit/scoring.hpp"
#include "support/temp_dir.hpp"
#include "support/test_models.hpp"

using namespace decodekit;
using namespace decodekit::lm;
using namespace decodekit::decoders;

namespace {

struct Criterion {
  int id;
  const char* title;
  bool ok = true;
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();

  Criterion(int id, const char* title) : id(id), title(title) {}
  ~Criterion() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("criterion %d [%s] %s (%.2fs)\n", id, ok ? "PASS" : "FAIL",
                title, secs);
    std::fflush(stdout);
  }

  bool note(bool cond) {
    ok = ok && cond;
    return cond;
  }
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

/// Percentile bootstrap 95% interval for mean(a) - mean(b).
std::pair<double, double> bootstrap_mean_diff_ci(const std::vector<double>& a,
                                                 const std::vector<double>& b,
                                                 int resamples,
                                                 std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> diffs;
  diffs.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    double sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      sa += a[rng.below(a.size())];
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      sb += b[rng.below(b.size())];
    }
    diffs.push_back(sa / static_cast<double>(a.size()) -
                    sb / static_cast<double>(b.size()));
  }
  std::sort(diffs.begin(), diffs.end());
  const auto lo = static_cast<std::size_t>(0.025 * resamples);
  const auto hi = static_cast<std::size_t>(0.975 * resamples) - 1;
  return {diffs[lo], diffs[hi]};
}

const ScoredSequence* argmax_sequence(const std::vector<ScoredSequence>& seqs) {
  const ScoredSequence* best = nullptr;
  for (const auto& s : seqs) {
    if (best == nullptr || s.log_prob > best->log_prob ||
        (s.log_prob == best->log_prob && s.tokens < best->tokens)) {
      best = &s;
    }
  }
  return best;
}

std::vector<std::vector<std::string>> split_corpus(const std::string& text) {
  std::vector<std::vector<std::string>> corpus;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    corpus.push_back(
        tokenize(std::string_view(text).substr(start, end - start)));
    start = end + 1;
  }
  return corpus;
}

}  // namespace

TEST_CASE("criterion 1: wide beam equals the enumeration argmax") {
  Criterion c(1, "MAP oracle: beam_k = |terminated| recovers the argmax");
  RngStream rng(20260809);
  int failures = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t words = 1 + rng.below(3);  // |extended vocab| <= 4
    const std::size_t depth = 1 + rng.below(2);
    const auto model = testsupport::random_table_model(words, depth, rng);
    const GenerationBudget budget{1 + rng.below(6)};  // max_len <= 6

    const auto seqs = enumerate_sequences(model, {}, budget);
    if (seqs.empty()) continue;
    const auto* best = argmax_sequence(seqs);
    const auto out =
        beam_decode(model, {}, static_cast<int>(seqs.size()), budget);
    const bool match = !out.records.empty() &&
                       out.records[0].tokens == best->tokens &&
                       out.records[0].log_prob == best->log_prob;
    if (!match) ++failures;
  }
  CHECK(c.note(failures == 0));
  CHECK(c.note(c.elapsed() < 5.0));
}

TEST_CASE("criterion 2: truncation transforms on 10k random distributions") {
  Criterion c(2, "top-k/top-p normalization, support, nucleus minimality");
  RngStream rng(777);
  int failures = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t words = 2 + rng.below(30);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < words; ++i) {
      names.push_back("w" + std::to_string(i));
    }
    const auto vocab = Vocabulary::from_words(names);
    const auto dist = testsupport::random_full_support(vocab, rng);
    const int k = 1 + static_cast<int>(rng.below(vocab.size()));
    const double p = 0.01 + 0.99 * rng.uniform();

    bool ok = true;
    try {
      const auto topk = truncate_top_k(dist, k);
      topk.validate(1e-9);
      // support: exactly min(k, positive entries), all kept >= all dropped
      std::size_t kept = 0;
      double min_kept = 2.0, max_dropped = -1.0;
      for (std::size_t i = 0; i < topk.size(); ++i) {
        if (topk.probs[i] > 0.0) {
          ++kept;
          min_kept = std::min(min_kept, dist.probs[i]);
        } else if (dist.probs[i] > 0.0) {
          max_dropped = std::max(max_dropped, dist.probs[i]);
        }
      }
      std::size_t positive = 0;
      for (double q : dist.probs) positive += q > 0.0 ? 1 : 0;
      ok = ok && kept == std::min<std::size_t>(static_cast<std::size_t>(k),
                                               positive);
      ok = ok && (max_dropped < 0.0 || max_dropped <= min_kept);

      const auto nucleus = truncate_top_p(dist, p);
      nucleus.validate(1e-9);
      double kept_mass = 0.0, smallest = 2.0;
      double nuc_min_kept = 2.0, nuc_max_dropped = -1.0;
      for (std::size_t i = 0; i < nucleus.size(); ++i) {
        if (nucleus.probs[i] > 0.0) {
          kept_mass += dist.probs[i];
          smallest = std::min(smallest, dist.probs[i]);
          nuc_min_kept = std::min(nuc_min_kept, dist.probs[i]);
        } else if (dist.probs[i] > 0.0) {
          nuc_max_dropped = std::max(nuc_max_dropped, dist.probs[i]);
        }
      }
      ok = ok && kept_mass >= p - 1e-12;   // reaches the threshold
      ok = ok && kept_mass - smallest < p; // and minimally so
      ok = ok && (nuc_max_dropped < 0.0 || nuc_max_dropped <= nuc_min_kept);
    } catch (const std::exception&) {
      ok = false;
    }
    if (!ok) ++failures;
  }
  CHECK(c.note(failures == 0));
}

TEST_CASE("criterion 3: sampling converges to the enumerated distribution") {
  Criterion c(3,
              "ancestral TV < 0.01 at 200k draws; truncated step TV < 0.01 at "
              "100k");

  // Fixed three-step model: branching at steps 1 and 2, forced EOS at 3.
  auto vocab = Vocabulary::from_words({"a", "b", "c"});
  TableModel model(vocab,
                   TokenDistribution::one_hot(vocab.size(), vocab.eos_id()));
  const auto step1 = testsupport::dist_of(
      vocab, {{"a", 0.5}, {"b", 0.3}, {"c", 0.15}, {"<eos>", 0.05}});
  model.set({}, {vocab.bos_id()}, step1);
  const std::vector<std::pair<std::string, std::map<std::string, double>>>
      step2 = {
          {"a", {{"a", 0.6}, {"b", 0.2}, {"c", 0.1}, {"<eos>", 0.1}}},
          {"b", {{"a", 0.1}, {"b", 0.1}, {"c", 0.4}, {"<eos>", 0.4}}},
          {"c", {{"a", 0.25}, {"b", 0.25}, {"c", 0.25}, {"<eos>", 0.25}}},
      };
  for (const auto& [w, probs] : step2) {
    model.set({}, {vocab.bos_id(), vocab.id_of(w)},
              testsupport::dist_of(vocab, probs));
  }
  const GenerationBudget budget{3};

  const auto seqs = enumerate_sequences(model, {}, budget);
  double mass = 0.0;
  std::map<std::vector<TokenId>, double> expected;
  for (const auto& s : seqs) {
    expected[s.tokens] = std::exp(s.log_prob);
    mass += std::exp(s.log_prob);
  }
  CHECK(c.note(std::abs(mass - 1.0) < 1e-9));  // the model always terminates

  const int n_samples = 200000;
  std::map<std::vector<TokenId>, int> observed;
  for (int s = 0; s < n_samples; ++s) {
    auto rng = derive_rng(99, "tv", "ancestral", static_cast<std::uint64_t>(s));
    observed[ancestral_sample(model, {}, budget, rng).tokens] += 1;
  }
  double tv = 0.0;
  for (const auto& [tokens, p] : expected) {
    const auto it = observed.find(tokens);
    const double f =
        it == observed.end()
            ? 0.0
            : static_cast<double>(it->second) / static_cast<double>(n_samples);
    tv += std::abs(f - p);
  }
  CHECK(c.note(tv / 2.0 < 0.01));

  // Step-1 frequencies under both truncations vs the truncated distribution.
  const int n_draws = 100000;
  for (const auto& truncation :
       {Truncation::make_top_k(2), Truncation::make_top_p(0.85)}) {
    const auto reference = truncation.kind == Truncation::Kind::top_k
                               ? truncate_top_k(step1, truncation.k)
                               : truncate_top_p(step1, truncation.p);
    std::vector<int> counts(vocab.size(), 0);
    const char* label =
        truncation.kind == Truncation::Kind::top_k ? "top_k" : "top_p";
    for (int s = 0; s < n_draws; ++s) {
      auto rng = derive_rng(99, "step1", label, static_cast<std::uint64_t>(s));
      const auto rec = truncated_sample(model, {}, {1}, rng, truncation);
      counts[static_cast<std::size_t>(rec.tokens[1])] += 1;
    }
    double step_tv = 0.0;
    for (std::size_t id = 0; id < vocab.size(); ++id) {
      const double f =
          static_cast<double>(counts[id]) / static_cast<double>(n_draws);
      step_tv += std::abs(f - reference.probs[id]);
    }
    CHECK(c.note(step_tv / 2.0 < 0.01));
  }
}

TEST_CASE("criterion 4: metric oracles hit their frozen values") {
  Criterion c(4, "dist/ent/diversity/BLEU/ROUGE/repetition/length oracles");
  using metrics::Tokens;
  auto toks = [](std::initializer_list<const char*> ws) {
    Tokens t;
    for (const char* w : ws) t.emplace_back(w);
    return t;
  };

  CHECK(c.note(std::abs(metrics::dist_n(toks({"a", "a", "b"}), 1) - 2.0 / 3.0) <
               1e-12));
  CHECK(c.note(std::abs(metrics::ent_n(toks({"a", "b", "a"}), 2) -
                        std::log(2.0)) < 1e-6));
  CHECK(c.note(std::abs(metrics::ent_n(toks({"a", "a", "a", "b", "a"}), 2) -
                        1.039721) < 1e-6));
  CHECK(c.note(std::abs(metrics::ngram_diversity(toks(
                            {"a", "a", "a", "a", "a"})) -
                        0.456667) < 1e-6));
  CHECK(c.note(std::abs(metrics::bleu({toks({"the", "the", "the"})},
                                      {{toks({"the", "cat"})}}, 1) -
                        33.333) < 1e-3));
  CHECK(c.note(std::abs(metrics::bleu({toks({"the"})},
                                      {{toks({"the", "cat"})}}, 1) -
                        36.788) < 1e-3));
  CHECK(c.note(std::abs(metrics::rouge_l(toks({"the", "cat", "sat"}),
                                         toks({"the", "cat", "ran"})) -
                        0.6667) < 1e-4));

  // Repetition truth table, six cases.
  const auto r1 =
      metrics::detect_repetition(toks({"A", "B", "A", "B", "A", "B"}));
  CHECK(c.note(r1.repeated && r1.phrase == toks({"A", "B"})));
  CHECK(c.note(
      !metrics::detect_repetition(toks({"A", "B", "A", "B", "C"})).repeated));
  const auto r3 =
      metrics::detect_repetition(toks({"A", "A", "A", "A", "A", "A"}));
  CHECK(c.note(r3.repeated && r3.phrase == toks({"A", "A"})));
  CHECK(c.note(!metrics::detect_repetition(toks({"A", "B", "A", "B"})).repeated));
  CHECK(c.note(!metrics::detect_repetition(toks({})).repeated));
  const auto r6 = metrics::detect_repetition(
      toks({"x", "A", "B", "C", "A", "B", "C", "A", "B", "C"}));
  CHECK(c.note(r6.repeated && r6.phrase == toks({"A", "B", "C"})));

  // Length bias, exact.
  using sizes = std::vector<std::size_t>;
  const auto e1 = metrics::length_errors(sizes{4, 9}, sizes{4, 9});
  CHECK(c.note(e1.mape == 0.0 && e1.mpe == 0.0));
  const auto e2 = metrics::length_errors(sizes{10}, sizes{8});
  CHECK(c.note(e2.mape == 25.0 && e2.mpe == 25.0));
  const auto e3 = metrics::length_errors(sizes{6, 10}, sizes{8, 8});
  CHECK(c.note(e3.mape == 25.0 && e3.mpe == 0.0));
}

TEST_CASE("criterion 5: sampled permutation p tracks exact enumeration") {
  Criterion c(5, "seed-averaged sampled p within 0.005 of 2^n enumeration");
  RngStream data_rng(4242);
  for (const std::size_t n : {std::size_t{8}, std::size_t{12}}) {
    for (int draw = 0; draw < 3; ++draw) {
      std::vector<double> a, b;
      for (std::size_t i = 0; i < n; ++i) {
        a.push_back(data_rng.uniform());
        b.push_back(data_rng.uniform());
      }
      const double exact = analysis::permutation_test_exact(a, b);
      double sum = 0.0;
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        sum += analysis::permutation_test_sampled(a, b, 10000, seed + 1);
      }
      const double averaged = sum / 20.0;
      CHECK(c.note(std::abs(averaged - exact) < 0.005));
    }
  }
}

TEST_CASE("criterion 6: mode-seeking vs sampling on the reference LM") {
  Criterion c(6, "likelihood and self-BLEU gaps with bootstrap 95% CIs");

  // >= 1 MB synthetic text corpus, one sentence per line.
  const auto text = testsupport::synthetic_corpus(1 << 20, 606);
  CHECK(c.note(text.size() >= (1 << 20)));
  const auto corpus = split_corpus(text);
  const auto model = train_ngram(corpus, 3, 0.1);
  const GenerationBudget budget{512};

  const std::vector<DecoderConfig> lineup = {
      DecoderConfig::parse("greedy"),
      DecoderConfig::parse("beam:k=5"),
      DecoderConfig::parse("beam:k=10"),
      DecoderConfig::parse("diverse_beam:k=5,G=5,lambda=0.7"),
      DecoderConfig::parse("ancestral"),
      DecoderConfig::parse("top_k:k=30"),
      DecoderConfig::parse("top_p:p=0.85"),
      DecoderConfig::parse("mbr:n=32"),
  };
  const std::size_t n_inputs = 200;
  const std::size_t K = 10;

  std::vector<GenerationRecord> records;
  for (std::size_t i = 0; i < n_inputs; ++i) {
    const std::string input_id = "u" + std::to_string(1000 + i);
    std::vector<std::vector<TokenId>> extras;
    for (const auto& d : lineup) {
      const std::string label = d.label();
      auto stamp = [&](GenerationRecord rec) {
        rec.input_id = input_id;
        rec.decoder = label;
        extras.push_back(rec.tokens);
        records.push_back(std::move(rec));
      };
      switch (d.kind) {
        case DecoderKind::greedy:
          stamp(greedy_decode(model, {}, budget));
          break;
        case DecoderKind::beam:
          for (auto& r : beam_decode(model, {}, d.beam_k, budget).records) {
            stamp(std::move(r));
          }
          break;
        case DecoderKind::diverse_beam:
          for (auto& r : diverse_beam_decode(model, {}, d.beam_k, d.groups,
                                             d.lambda, budget)
                             .records) {
            stamp(std::move(r));
          }
          break;
        case DecoderKind::ancestral:
        case DecoderKind::top_k:
        case DecoderKind::top_p:
          for (std::size_t s = 0; s < K; ++s) {
            auto rng = derive_rng(606, input_id, label, s);
            GenerationRecord rec;
            if (d.kind == DecoderKind::ancestral) {
              rec = ancestral_sample(model, {}, budget, rng);
            } else if (d.kind == DecoderKind::top_k) {
              rec = truncated_sample(model, {}, budget, rng,
                                     Truncation::make_top_k(d.top_k));
            } else {
              rec = truncated_sample(model, {}, budget, rng,
                                     Truncation::make_top_p(d.top_p));
            }
            rec.sample_index = static_cast<int>(s);
            stamp(std::move(rec));
          }
          break;
        case DecoderKind::mbr: {
          auto rng = derive_rng(606, input_id, label, 0);
          stamp(mbr_decode(model, {}, budget, d.mbr_samples,
                           metrics::smoothed_bleu_utility(), extras, rng));
          break;
        }
      }
    }
  }

  // (a) mean normalized log-probability: mode-seeking above ancestral.
  std::vector<double> mode_seeking_nlp, ancestral_nlp;
  for (const auto& rec : records) {
    const auto kind = DecoderConfig::parse(rec.decoder).kind;
    if (is_deterministic(kind)) {
      mode_seeking_nlp.push_back(rec.norm_log_prob);
    } else if (kind == DecoderKind::ancestral) {
      ancestral_nlp.push_back(rec.norm_log_prob);
    }
  }
  const double nlp_gap = mean_of(mode_seeking_nlp) - mean_of(ancestral_nlp);
  const auto nlp_ci =
      bootstrap_mean_diff_ci(mode_seeking_nlp, ancestral_nlp, 1000, 6001);
  CHECK(c.note(nlp_gap > 0.0));
  CHECK(c.note(nlp_ci.first > 0.0));  // 95% interval excludes zero

  // (b) set-level self-BLEU: beam sets above ancestral K=10 sets.
  std::vector<metrics::SetMember> members;
  members.reserve(records.size());
  for (const auto& rec : records) {
    members.push_back(metrics::to_set_member(rec, model.vocab()));
  }
  auto set_rng = derive_rng(606, "", "metric-sets", 0);
  const auto sets = metrics::collect_metric_sets(
      members, metrics::SetProtocol::pooled, K, set_rng);
  std::vector<double> beam_self_bleu, ancestral_self_bleu;
  for (const auto& set : sets) {
    const auto kind = DecoderConfig::parse(set.decoder).kind;
    if (set.members.size() < 2) continue;
    if (is_beam_kind(kind)) {
      beam_self_bleu.push_back(metrics::self_bleu(set));
    } else if (kind == DecoderKind::ancestral) {
      ancestral_self_bleu.push_back(metrics::self_bleu(set));
    }
  }
  CHECK(c.note(!beam_self_bleu.empty() && !ancestral_self_bleu.empty()));
  const double sb_gap = mean_of(beam_self_bleu) - mean_of(ancestral_self_bleu);
  const auto sb_ci =
      bootstrap_mean_diff_ci(beam_self_bleu, ancestral_self_bleu, 1000, 6002);
  CHECK(c.note(sb_gap > 0.0));
  CHECK(c.note(sb_ci.first > 0.0));

  CHECK(c.note(c.elapsed() < 300.0));
}

TEST_CASE("criterion 7: rank bounds under the default 4/3 grouping") {
  Criterion c(7, "best ranks never exceed 4 (deterministic) / 5 (stochastic)");
  analysis::GroupingSpec grouping;
  grouping.deterministic = {"greedy", "beam:k=5", "beam:k=10",
                            "diverse_beam:k=5,G=5,lambda=0.7"};
  grouping.stochastic = {"ancestral", "top_k:k=30", "top_p:p=0.85"};

  std::vector<std::string> ranked;
  for (const auto& d : grouping.deterministic) ranked.push_back(d);
  for (const auto& d : grouping.stochastic) ranked.push_back(d);

  RngStream rng(7777);
  bool bounds_hold = true;
  const int tables = 10000;
  std::vector<analysis::AggregatedRating> batch;
  batch.reserve(static_cast<std::size_t>(tables) * ranked.size());
  for (int t = 0; t < tables; ++t) {
    const std::string input = "t" + std::to_string(t);
    for (const auto& d : ranked) {
      batch.push_back(
          {input, d, "fluency", 1.0 + static_cast<double>(rng.below(8))});
    }
  }
  const auto summary = analysis::rank_groups(batch, grouping);
  CHECK(c.note(summary.per_input.size() == static_cast<std::size_t>(tables)));
  for (const auto& pi : summary.per_input) {
    if (pi.best_deterministic > 4 || pi.best_stochastic > 5 ||
        pi.best_deterministic < 1 || pi.best_stochastic < 1) {
      bounds_hold = false;
    }
  }
  CHECK(c.note(bounds_hold));
}

TEST_CASE("criterion 8: byte-identical pipeline across worker counts") {
  Criterion c(8, "decode/evaluate/analyze/report identical at 1 and 8 workers");
  testsupport::TempDir tmp;

  // Conditional dialogue experiment over the synthetic vocabulary.
  const auto text = testsupport::synthetic_corpus(64 << 10, 808);
  const auto model = train_ngram(split_corpus(text), 3, 0.1);
  save_ngram(model, tmp.path / "model.json");

  {
    std::ofstream inputs(tmp.path / "corpus.jsonl");
    RngStream rng(11);
    for (int i = 0; i < 16; ++i) {
      const auto context = testsupport::pick(testsupport::determiners(), rng) +
                           " " + testsupport::pick(testsupport::nouns(), rng);
      const auto reference = testsupport::synthetic_sentence(rng);
      inputs << R"({"id": "d)" << 100 + i << R"(", "context": ")" << context
             << R"(", "reference": ")" << reference << R"("})" << "\n";
    }
  }

  harness::ExperimentConfig config;
  config.task = harness::task_preset(harness::TaskKind::dialogue);
  config.model_path = tmp.path / "model.json";
  config.corpus_path = tmp.path / "corpus.jsonl";
  config.samples_per_input = 10;
  config.seed = 2024;
  config.max_len_override = 24;
  for (const char* spec :
       {"greedy", "beam:k=5", "beam:k=10", "diverse_beam:k=5,G=5,lambda=0.7",
        "ancestral", "top_k:k=30", "top_p:p=0.85", "mbr:n=32"}) {
    config.decoder_configs.push_back(DecoderConfig::parse(spec));
  }

  // Ratings for every (input, decoder) cell.
  {
    std::ofstream out(tmp.path / "ratings.jsonl");
    RngStream rng(12);
    for (int i = 0; i < 16; ++i) {
      for (const auto& d : config.decoder_configs) {
        for (const char* criterion : {"adequacy", "naturalness"}) {
          for (int rater = 0; rater < 3; ++rater) {
            out << R"({"input_id": "d)" << 100 + i << R"(", "decoder": ")"
                << d.label() << R"(", "criterion": ")" << criterion
                << R"(", "rater": "r)" << rater << R"(", "score": )"
                << 1 + rng.below(8) << "}\n";
          }
        }
      }
    }
    config.ratings_path = tmp.path / "ratings.jsonl";
  }

  auto run_all = [&](const std::filesystem::path& out_dir, int workers) {
    auto cfg = config;
    cfg.out_dir = out_dir;
    cfg.workers = workers;
    const auto gen = harness::run_decode(cfg);
    const auto met = harness::run_evaluate(cfg, gen);
    const auto dir = harness::run_analyze(cfg, met);
    harness::run_report(cfg, dir);
  };
  run_all(tmp.path / "run1", 1);
  run_all(tmp.path / "run8", 8);

  auto same = [&](const std::filesystem::path& rel) {
    const auto a = harness::read_text_file(tmp.path / "run1" / rel);
    const auto b = harness::read_text_file(tmp.path / "run8" / rel);
    return a == b && !a.empty();
  };
  CHECK(c.note(same("generations.jsonl")));
  CHECK(c.note(same("metrics.jsonl")));
  CHECK(c.note(same("skips.jsonl")));
  CHECK(c.note(same("report.md")));
  for (const auto& entry :
       std::filesystem::directory_iterator(tmp.path / "run1" / "analysis")) {
    CHECK(c.note(
        same(std::filesystem::path("analysis") / entry.path().filename())));
  }
}

TEST_CASE("criterion 9: MBR selects the sample mode / the consensus string") {
  Criterion c(9, "indicator utility = multiset mode; identical candidate wins");
  RngStream rng(909);

  Utility indicator = [](std::span<const TokenId> a,
                         std::span<const TokenId> b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end()) ? 1.0 : 0.0;
  };

  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto model =
        testsupport::random_table_model(1 + rng.below(2), 1, rng);
    const GenerationBudget budget{3};
    const int n = 6;
    const std::string id = "trial" + std::to_string(trial);

    // Replay the identical stream to reconstruct the sample multiset.
    auto mbr_rng = derive_rng(909, id, "mbr", 0);
    auto replay_rng = derive_rng(909, id, "mbr", 0);
    std::map<std::vector<TokenId>, std::pair<int, double>> counts;
    for (int s = 0; s < n; ++s) {
      const auto rec = ancestral_sample(model, {}, budget, replay_rng);
      auto& slot = counts[rec.tokens];
      slot.first += 1;
      slot.second = rec.log_prob;
    }
    const auto rec = mbr_decode(model, {}, budget, n, indicator, {}, mbr_rng);

    // Documented tie rule: count, then model log-probability, then lex order.
    const std::vector<TokenId>* expected = nullptr;
    std::pair<int, double> best{0, 0.0};
    for (const auto& [tokens, slot] : counts) {
      const bool take =
          expected == nullptr || slot.first > best.first ||
          (slot.first == best.first &&
           (slot.second > best.second ||
            (slot.second == best.second && tokens < *expected)));
      if (take) {
        expected = &tokens;
        best = slot;
      }
    }
    if (rec.tokens != *expected) ++failures;
  }
  CHECK(c.note(failures == 0));

  // Consensus candidate identical to every sample wins under smoothed BLEU.
  int consensus_failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> words;
    const std::size_t len = 2 + rng.below(4);
    for (std::size_t i = 0; i < len; ++i) {
      words.push_back("w" + std::to_string(rng.below(4)) + "_" +
                      std::to_string(i));
    }
    const auto model = testsupport::forced_path_model(words);
    const auto& v = model.vocab();

    // A few arbitrary competitor candidates over the same vocabulary.
    std::vector<std::vector<TokenId>> extras;
    for (int e = 0; e < 4; ++e) {
      std::vector<TokenId> cand{v.bos_id()};
      const std::size_t clen = 1 + rng.below(6);
      for (std::size_t t = 0; t < clen; ++t) {
        cand.push_back(static_cast<TokenId>(2 + rng.below(v.size() - 2)));
      }
      if (rng.below(2) == 0) cand.push_back(v.eos_id());
      extras.push_back(std::move(cand));
    }

    auto rng_stream = derive_rng(910, "cons" + std::to_string(trial), "mbr", 0);
    const auto rec =
        mbr_decode(model, {}, {static_cast<std::size_t>(len) + 1}, 8,
                   metrics::smoothed_bleu_utility(), extras, rng_stream);
    if (rec.text != join_tokens(words)) ++consensus_failures;
  }
  CHECK(c.note(consensus_failures == 0));
}
