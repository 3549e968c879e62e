#include "decodekit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "decodekit/error.hpp"

namespace decodekit::metrics {

namespace {

std::string gram_key(std::span<const std::string> tokens, std::size_t start,
                     std::size_t n) {
  std::string key;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) key.push_back('\x1f');
    key += tokens[start + i];
  }
  return key;
}

// ---------------------------------------------------------------------------
// BLEU core, generic over the token type so the same arithmetic backs the
// string-level metric and the id-level MBR utility.
// ---------------------------------------------------------------------------

struct BleuStats {
  std::vector<std::uint64_t> matches;  // clipped, per order 1..max_n
  std::vector<std::uint64_t> totals;
  std::uint64_t cand_len = 0;
  std::uint64_t ref_len = 0;  // closest reference length

  explicit BleuStats(int max_n)
      : matches(static_cast<std::size_t>(max_n), 0),
        totals(static_cast<std::size_t>(max_n), 0) {}

  void add(const BleuStats& other) {
    for (std::size_t i = 0; i < matches.size(); ++i) {
      matches[i] += other.matches[i];
      totals[i] += other.totals[i];
    }
    cand_len += other.cand_len;
    ref_len += other.ref_len;
  }
};

template <typename Tok>
std::map<std::vector<Tok>, std::uint64_t> grams_of(std::span<const Tok> tokens,
                                                   std::size_t n) {
  std::map<std::vector<Tok>, std::uint64_t> grams;
  if (tokens.size() >= n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      grams[std::vector<Tok>(tokens.begin() + i, tokens.begin() + i + n)] += 1;
    }
  }
  return grams;
}

template <typename Tok>
BleuStats pair_stats(std::span<const Tok> candidate,
                     std::span<const std::vector<Tok>> references, int max_n) {
  BleuStats stats(max_n);
  stats.cand_len = candidate.size();

  // Effective reference length: closest to the candidate, ties to shorter.
  bool first = true;
  for (const auto& ref : references) {
    const auto len = static_cast<std::uint64_t>(ref.size());
    if (first) {
      stats.ref_len = len;
      first = false;
      continue;
    }
    const auto diff = [&](std::uint64_t r) {
      return r > stats.cand_len ? r - stats.cand_len : stats.cand_len - r;
    };
    if (diff(len) < diff(stats.ref_len) ||
        (diff(len) == diff(stats.ref_len) && len < stats.ref_len)) {
      stats.ref_len = len;
    }
  }

  for (int n = 1; n <= max_n; ++n) {
    const auto cand_grams = grams_of(candidate, static_cast<std::size_t>(n));
    std::uint64_t total = 0;
    for (const auto& [_, c] : cand_grams) total += c;
    stats.totals[static_cast<std::size_t>(n - 1)] = total;

    // Clip against the maximum count any single reference provides.
    std::map<std::vector<Tok>, std::uint64_t> ref_max;
    for (const auto& ref : references) {
      for (const auto& [gram, c] :
           grams_of(std::span<const Tok>(ref), static_cast<std::size_t>(n))) {
        auto& slot = ref_max[gram];
        slot = std::max(slot, c);
      }
    }
    std::uint64_t matched = 0;
    for (const auto& [gram, c] : cand_grams) {
      auto it = ref_max.find(gram);
      if (it != ref_max.end()) matched += std::min(c, it->second);
    }
    stats.matches[static_cast<std::size_t>(n - 1)] = matched;
  }
  return stats;
}

/// 0-100 score from pooled statistics. `smoothed` applies add-one smoothing
/// to zero-match precisions of order >= 2 (sentence mode); any remaining
/// zero precision makes the whole score 0.
double score_stats(const BleuStats& stats, int max_n, bool smoothed) {
  if (stats.cand_len == 0) return 0.0;  // zero-length candidate side
  double log_precision = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    double m = static_cast<double>(stats.matches[static_cast<std::size_t>(n - 1)]);
    double t = static_cast<double>(stats.totals[static_cast<std::size_t>(n - 1)]);
    if (smoothed && n >= 2 && m == 0.0) {
      m = 1.0;
      t += 1.0;
    }
    if (m == 0.0 || t == 0.0) return 0.0;
    log_precision += std::log(m / t) / max_n;
  }
  const double bp =
      stats.cand_len > stats.ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(stats.ref_len) /
                               static_cast<double>(stats.cand_len));
  return 100.0 * bp * std::exp(log_precision);
}

}  // namespace

NGramCounts count_ngrams(std::span<const std::string> tokens, std::size_t n) {
  if (n < 1) raise(Errc::invalid_parameter, "n must be >= 1");
  NGramCounts out;
  out.n = n;
  if (tokens.size() >= n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      out.counts[gram_key(tokens, i, n)] += 1;
      ++out.total;
    }
  }
  return out;
}

double dist_n(std::span<const std::string> tokens, std::size_t n) {
  const auto counts = count_ngrams(tokens, n);
  if (counts.total == 0) {
    raise(Errc::undefined_metric,
          "no " + std::to_string(n) + "-grams in the string");
  }
  return static_cast<double>(counts.counts.size()) /
         static_cast<double>(counts.total);
}

double ent_n(std::span<const std::string> tokens, std::size_t n) {
  const auto counts = count_ngrams(tokens, n);
  if (counts.total == 0) {
    raise(Errc::undefined_metric,
          "no " + std::to_string(n) + "-grams in the string");
  }
  const double total = static_cast<double>(counts.total);
  double entropy = 0.0;
  for (const auto& [_, c] : counts.counts) {
    const double p = static_cast<double>(c) / total;
    entropy -= p * std::log(p);
  }
  return entropy;
}

double ngram_diversity(std::span<const std::string> tokens) {
  double sum = 0.0;
  for (std::size_t n = 1; n <= 5; ++n) sum += dist_n(tokens, n);
  return sum / 5.0;
}

double bleu(const std::vector<Tokens>& candidates,
            const std::vector<std::vector<Tokens>>& references, int max_n,
            BleuMode mode) {
  if (max_n < 1) raise(Errc::invalid_parameter, "max_n must be >= 1");
  if (candidates.size() != references.size()) {
    raise(Errc::pairing_mismatch,
          "candidate and reference lists differ in length");
  }
  if (candidates.empty()) {
    raise(Errc::invalid_parameter, "no candidate/reference pairs");
  }

  if (mode == BleuMode::corpus) {
    BleuStats pooled(max_n);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      pooled.add(pair_stats<std::string>(candidates[i], references[i], max_n));
    }
    return score_stats(pooled, max_n, /*smoothed=*/false);
  }

  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    sum += score_stats(
        pair_stats<std::string>(candidates[i], references[i], max_n), max_n,
        /*smoothed=*/true);
  }
  return sum / static_cast<double>(candidates.size());
}

double sentence_bleu(const Tokens& candidate,
                     const std::vector<Tokens>& references, int max_n) {
  return bleu({candidate}, {references}, max_n, BleuMode::sentence);
}

double self_bleu(const GenerationSet& set, int max_n) {
  if (set.members.size() < 2) {
    raise(Errc::invalid_set, "self-BLEU needs at least two members");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < set.members.size(); ++i) {
    std::vector<Tokens> refs;
    refs.reserve(set.members.size() - 1);
    for (std::size_t j = 0; j < set.members.size(); ++j) {
      if (j != i) refs.push_back(set.members[j]);
    }
    sum += sentence_bleu(set.members[i], refs, max_n);
  }
  return sum / static_cast<double>(set.members.size());
}

double rouge_l(const Tokens& candidate, const Tokens& reference) {
  if (reference.empty()) {
    raise(Errc::invalid_reference, "empty reference");
  }
  if (candidate.empty()) return 0.0;

  const std::size_t m = candidate.size();
  const std::size_t n = reference.size();
  std::vector<std::size_t> prev(n + 1, 0), cur(n + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      if (candidate[i - 1] == reference[j - 1]) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = std::max(prev[j], cur[j - 1]);
      }
    }
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[n]);
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(m);
  const double r = lcs / static_cast<double>(n);
  return 2.0 * p * r / (p + r);
}

RepetitionResult detect_repetition(std::span<const std::string> tokens) {
  RepetitionResult result;
  // Shortest phrase first; a phrase must tile the suffix at least 3 times.
  for (std::size_t len = 2; len * 3 <= tokens.size(); ++len) {
    const std::size_t end = tokens.size();
    std::size_t repeats = 1;
    for (;;) {
      const std::size_t next = repeats + 1;
      if (next * len > end) break;
      bool equal = true;
      for (std::size_t i = 0; i < len; ++i) {
        if (tokens[end - len + i] != tokens[end - next * len + i]) {
          equal = false;
          break;
        }
      }
      if (!equal) break;
      repeats = next;
    }
    if (repeats >= 3) {
      result.repeated = true;
      result.phrase.assign(tokens.end() - static_cast<std::ptrdiff_t>(len),
                           tokens.end());
      return result;
    }
  }
  return result;
}

LengthErrors length_errors(std::span<const std::size_t> gen_lengths,
                           std::span<const std::size_t> ref_lengths) {
  if (gen_lengths.size() != ref_lengths.size()) {
    raise(Errc::pairing_mismatch, "length lists differ in size");
  }
  if (gen_lengths.empty()) {
    raise(Errc::invalid_parameter, "empty length lists");
  }
  double abs_sum = 0.0;
  double signed_sum = 0.0;
  for (std::size_t i = 0; i < gen_lengths.size(); ++i) {
    if (ref_lengths[i] == 0) {
      raise(Errc::invalid_reference, "zero reference length");
    }
    const double g = static_cast<double>(gen_lengths[i]);
    const double r = static_cast<double>(ref_lengths[i]);
    abs_sum += std::abs(g - r) / r;
    signed_sum += (g - r) / r;
  }
  const double n = static_cast<double>(gen_lengths.size());
  return {100.0 * abs_sum / n, 100.0 * signed_sum / n};
}

SetMember to_set_member(const decoders::GenerationRecord& record,
                        const lm::Vocabulary& vocab) {
  return SetMember{record.input_id, record.decoder, record.sample_index,
                   vocab.content_strings(record.tokens)};
}

std::vector<GenerationSet> collect_metric_sets(
    const std::vector<SetMember>& generations, SetProtocol protocol,
    std::size_t K, RngStream& rng) {
  if (K < 1) raise(Errc::invalid_parameter, "set size K must be >= 1");

  using decoders::DecoderConfig;
  using decoders::DecoderKind;

  auto forms_sets = [](DecoderKind kind) {
    return decoders::is_beam_kind(kind) || decoders::is_stochastic(kind);
  };

  std::vector<GenerationSet> sets;

  if (protocol == SetProtocol::per_input) {
    std::map<std::pair<std::string, std::string>,
             std::vector<const SetMember*>>
        cells;
    for (const auto& rec : generations) {
      cells[{rec.input_id, rec.decoder}].push_back(&rec);
    }
    for (auto& [key, records] : cells) {
      const DecoderKind kind = DecoderConfig::parse(key.second).kind;
      if (!forms_sets(kind)) continue;
      std::sort(records.begin(), records.end(),
                [](const auto* a, const auto* b) {
                  return a->sample_index < b->sample_index;
                });
      std::size_t take = records.size();
      if (decoders::is_stochastic(kind)) {
        if (records.size() < K) {
          raise(Errc::insufficient_samples,
                key.second + " has " + std::to_string(records.size()) +
                    " samples for input " + key.first + ", needs " +
                    std::to_string(K));
        }
        take = K;
      }
      GenerationSet set;
      set.input_id = key.first;
      set.decoder = key.second;
      for (std::size_t i = 0; i < take; ++i) {
        set.members.push_back(records[i]->content);
      }
      sets.push_back(std::move(set));
    }
    return sets;
  }

  // Pooled protocol: per decoder, shuffle the whole pool and cut disjoint
  // K-subsets; the remainder is dropped.
  std::map<std::string, std::vector<const SetMember*>> pools;
  for (const auto& rec : generations) {
    pools[rec.decoder].push_back(&rec);
  }
  for (auto& [decoder, records] : pools) {
    const DecoderKind kind = DecoderConfig::parse(decoder).kind;
    if (!forms_sets(kind)) continue;
    std::sort(records.begin(), records.end(), [](const auto* a, const auto* b) {
      if (a->input_id != b->input_id) return a->input_id < b->input_id;
      return a->sample_index < b->sample_index;
    });
    // Fisher-Yates with the stream's bounded draw, documented for replay.
    for (std::size_t i = records.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.below(i));
      std::swap(records[i - 1], records[j]);
    }
    const std::size_t subsets = records.size() / K;
    for (std::size_t s = 0; s < subsets; ++s) {
      GenerationSet set;
      char id[32];
      std::snprintf(id, sizeof(id), "subset-%04zu", s);
      set.input_id = id;
      set.decoder = decoder;
      for (std::size_t i = 0; i < K; ++i) {
        set.members.push_back(records[s * K + i]->content);
      }
      sets.push_back(std::move(set));
    }
  }
  return sets;
}

Tokens concat_members(const GenerationSet& set) {
  Tokens all;
  for (const auto& member : set.members) {
    all.insert(all.end(), member.begin(), member.end());
  }
  return all;
}

decoders::Utility smoothed_bleu_utility() {
  return [](std::span<const lm::TokenId> candidate,
            std::span<const lm::TokenId> reference) {
    std::vector<std::vector<lm::TokenId>> refs{
        std::vector<lm::TokenId>(reference.begin(), reference.end())};
    return score_stats(pair_stats<lm::TokenId>(candidate, refs, 4), 4,
                       /*smoothed=*/true);
  };
}

}  // namespace decodekit::metrics
