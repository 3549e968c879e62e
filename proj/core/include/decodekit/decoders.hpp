#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "decodekit/model.hpp"
#include "decodekit/rng.hpp"

namespace decodekit::decoders {

enum class DecoderKind {
  greedy,
  beam,
  diverse_beam,
  ancestral,
  top_k,
  top_p,
  mbr,
};

bool is_deterministic(DecoderKind kind);
/// Set-producing kinds under the set-level measurement protocol: beam
/// methods contribute their whole beam, sampling methods K samples, and
/// single-output methods (greedy, MBR) are excluded.
bool is_beam_kind(DecoderKind kind);
bool is_stochastic(DecoderKind kind);

/**
 * One decoding strategy with its hyperparameters. Defaults follow the
 * common working settings for each family: beam width 5, five beam groups
 * with diversity strength 0.7, k = 30, p = 0.85, 32 Monte-Carlo samples.
 */
struct DecoderConfig {
  DecoderKind kind = DecoderKind::greedy;
  int beam_k = 5;          // beam, diverse_beam
  int groups = 5;          // diverse_beam
  double lambda = 0.7;     // diverse_beam
  int top_k = 30;          // top_k
  double top_p = 0.85;     // top_p
  int mbr_samples = 32;    // mbr
  /// Optional per-decoder seed for the randomized kinds; replaces the
  /// experiment's global seed in stream derivation for this decoder.
  std::optional<std::uint64_t> seed;

  /// Canonical label, e.g. "beam:k=5" or "top_p:p=0.85"; doubles as the
  /// round-trippable --decoder spec syntax.
  std::string label() const;

  /// Parses a spec like "greedy", "beam:k=10", "diverse_beam:k=10,G=5,lambda=0.7".
  /// Throws Errc::config on unknown kinds or malformed key=value parts.
  static DecoderConfig parse(std::string_view spec);
};

/**
 * One decoded string with provenance. `tokens` is the full internal form
 * [BOS, ..., EOS] (EOS absent iff truncated); `text` is the rendered content.
 * log_prob is always the model's own score of the token path, so each record
 * replays exactly through sequence_log_prob.
 */
struct GenerationRecord {
  std::string input_id;
  std::string decoder;
  int sample_index = 0;
  std::vector<lm::TokenId> tokens;
  std::string text;
  double log_prob = 0.0;
  double norm_log_prob = 0.0;
  bool truncated = false;
};

/// Ranked decode result; beam methods return beam_k records, stochastic
/// methods one record per call, greedy/MBR a single record.
struct DecodeOutput {
  std::vector<GenerationRecord> records;
};

/**
 * Keeps the k highest-probability tokens (ties to the lower id) and rescales
 * the kept mass to 1.
 */
lm::TokenDistribution truncate_top_k(const lm::TokenDistribution& dist, int k);

/**
 * Nucleus truncation: keeps the smallest descending-probability prefix whose
 * cumulative mass reaches p (ties to the lower id), renormalized by the kept
 * mass.
 */
lm::TokenDistribution truncate_top_p(const lm::TokenDistribution& dist,
                                     double p);

GenerationRecord greedy_decode(const lm::SequenceModel& model,
                               const lm::Context& context,
                               const lm::GenerationBudget& budget);

/**
 * Width-beam_k search under the raw score sum(ln p), no length
 * normalization. Hypotheses that emit EOS leave the beam for a completed
 * pool; the search stops once the pool holds beam_k finished hypotheses or
 * the budget is exhausted. If the pool comes up short the best incomplete
 * hypotheses fill out the output, flagged truncated. Records are ranked by
 * raw score, ties by lexicographic token-id order.
 */
DecodeOutput beam_decode(const lm::SequenceModel& model,
                         const lm::Context& context, int beam_k,
                         const lm::GenerationBudget& budget);

/**
 * Beam search over groups_G equal groups expanded sequentially per step.
 * Group g ranks candidates by ln p minus lambda times the number of
 * hypotheses in earlier groups whose token at the current step equals the
 * candidate's new token (Hamming dissimilarity). The returned union is
 * ranked by raw log-probability; the penalty never enters reported scores.
 */
DecodeOutput diverse_beam_decode(const lm::SequenceModel& model,
                                 const lm::Context& context, int beam_k,
                                 int groups_G, double lambda,
                                 const lm::GenerationBudget& budget);

GenerationRecord ancestral_sample(const lm::SequenceModel& model,
                                  const lm::Context& context,
                                  const lm::GenerationBudget& budget,
                                  RngStream& rng);

struct Truncation {
  enum class Kind { top_k, top_p };
  Kind kind = Kind::top_k;
  int k = 30;
  double p = 0.85;

  static Truncation make_top_k(int k) { return {Kind::top_k, k, 0.0}; }
  static Truncation make_top_p(double p) { return {Kind::top_p, 0, p}; }
};

/**
 * Ancestral sampling from the truncated per-step distribution. The record's
 * log_prob is taken under the ORIGINAL model distribution, not the proposal,
 * so likelihood analyses compare decoders on the same scale.
 */
GenerationRecord truncated_sample(const lm::SequenceModel& model,
                                  const lm::Context& context,
                                  const lm::GenerationBudget& budget,
                                  RngStream& rng, const Truncation& truncation);

/// Utility u(candidate, pseudo-reference) over content tokens (no BOS/EOS).
using Utility = std::function<double(std::span<const lm::TokenId>,
                                     std::span<const lm::TokenId>)>;

/**
 * Monte-Carlo minimum Bayes risk: draws mbr_samples ancestral samples,
 * pools them with extra_candidates (deduplicated), and returns the candidate
 * with the highest mean utility against the sample multiset. Ties break by
 * higher model log-probability, then lexicographic token order.
 */
GenerationRecord mbr_decode(
    const lm::SequenceModel& model, const lm::Context& context,
    const lm::GenerationBudget& budget, int mbr_samples,
    const Utility& utility,
    const std::vector<std::vector<lm::TokenId>>& extra_candidates,
    RngStream& rng);

/// Token range with leading BOS and trailing EOS stripped.
std::span<const lm::TokenId> content_span(std::span<const lm::TokenId> tokens,
                                          const lm::Vocabulary& vocab);

}  // namespace decodekit::decoders
