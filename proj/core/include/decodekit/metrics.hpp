#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "decodekit/decoders.hpp"
#include "decodekit/rng.hpp"
#include "decodekit/vocab.hpp"

namespace decodekit::metrics {

/// Metrics operate on plain token strings so they apply to references and
/// generations alike, independent of any model vocabulary.
using Tokens = std::vector<std::string>;

struct NGramCounts {
  std::size_t n = 1;
  // n-gram key: tokens joined with '\x1f'.
  std::unordered_map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;
};

NGramCounts count_ngrams(std::span<const std::string> tokens, std::size_t n);

/// Distinct n-grams over total n-grams. Throws Errc::undefined_metric when
/// the token range holds no n-gram; callers skip such cells.
double dist_n(std::span<const std::string> tokens, std::size_t n);

/// Entropy (nats) of the empirical n-gram distribution.
double ent_n(std::span<const std::string> tokens, std::size_t n);

/// Mean of dist-n over n = 1..5; undefined when any component is.
double ngram_diversity(std::span<const std::string> tokens);

enum class BleuMode { corpus, sentence };

/**
 * Modified n-gram precision BLEU on the 0-100 scale, brevity penalty
 * exp(1 - r/c) when the candidate is shorter than the (closest) reference.
 * Corpus mode pools clipped matches and totals before scoring; sentence mode
 * applies add-one smoothing to zero-match precisions of order >= 2. An
 * all-empty candidate side scores 0.
 */
double bleu(const std::vector<Tokens>& candidates,
            const std::vector<std::vector<Tokens>>& references, int max_n = 4,
            BleuMode mode = BleuMode::corpus);

double sentence_bleu(const Tokens& candidate, const std::vector<Tokens>& references,
                     int max_n = 4);

/// Members of one measured set: the beam of a beam method or K samples of a
/// stochastic one, as content token strings.
struct GenerationSet {
  std::string input_id;
  std::string decoder;
  std::vector<Tokens> members;
};

/// Mean sentence-BLEU of each member against all other members
/// (multi-reference clipping by the max reference count per n-gram).
/// High self-BLEU means low diversity. Throws Errc::invalid_set below 2 members.
double self_bleu(const GenerationSet& set, int max_n = 4);

/// LCS-based F1. Throws Errc::invalid_reference on an empty reference.
double rouge_l(const Tokens& candidate, const Tokens& reference);

struct RepetitionResult {
  bool repeated = false;
  Tokens phrase;  // shortest repeating phrase when repeated
};

/// Degenerate-repetition check: true when a phrase of length >= 2 tiles the
/// final stretch of the string at least three times through the end.
RepetitionResult detect_repetition(std::span<const std::string> tokens);

struct LengthErrors {
  double mape = 0.0;  // mean |g-r|/r, percent
  double mpe = 0.0;   // mean (g-r)/r, percent, signed
};

LengthErrors length_errors(std::span<const std::size_t> gen_lengths,
                           std::span<const std::size_t> ref_lengths);

/// How per-(input, decoder) cells become measured sets.
enum class SetProtocol {
  per_input,  // conditional tasks: one set per cell
  pooled,     // unconditional: pool per decoder, random disjoint K-subsets
};

/// One generation's identity and content tokens, the unit the set protocol
/// works over.
struct SetMember {
  std::string input_id;
  std::string decoder;
  int sample_index = 0;
  Tokens content;
};

SetMember to_set_member(const decoders::GenerationRecord& record,
                        const lm::Vocabulary& vocab);

/**
 * Applies the set-level measurement protocol to a generations table.
 * Beam methods contribute their full beam; stochastic methods their first K
 * samples per input (per_input) or all samples pooled and partitioned into
 * random disjoint K-subsets with the remainder dropped (pooled); greedy and
 * MBR never form sets. Throws Errc::insufficient_samples when a stochastic
 * cell holds fewer than K samples under per_input.
 */
std::vector<GenerationSet> collect_metric_sets(
    const std::vector<SetMember>& generations, SetProtocol protocol,
    std::size_t K, RngStream& rng);

/// Concatenated members of a set, the token range set-level n-gram
/// statistics are computed over.
Tokens concat_members(const GenerationSet& set);

/// Smoothed sentence-BLEU over token ids; the default MBR utility.
decoders::Utility smoothed_bleu_utility();

}  // namespace decodekit::metrics
