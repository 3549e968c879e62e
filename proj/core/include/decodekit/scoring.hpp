#pragma once

#include <span>
#include <vector>

#include "decodekit/model.hpp"

namespace decodekit::lm {

/**
 * Natural-log probability of a full sequence [BOS, ..., EOS] (or a truncated
 * one without the final EOS): the sum of step log-probabilities over every
 * token after BOS, including the EOS term when present.
 */
double sequence_log_prob(const SequenceModel& model, const Context& context,
                         std::span<const TokenId> sequence);

/// sequence_log_prob divided by the number of scored tokens.
/// Throws Errc::empty_sequence for a bare [BOS].
double normalized_log_prob(const SequenceModel& model, const Context& context,
                           std::span<const TokenId> sequence);

/// exp(-normalized_log_prob); 1 exactly when every step had probability 1.
double perplexity(const SequenceModel& model, const Context& context,
                  std::span<const TokenId> sequence);

struct ScoredSequence {
  std::vector<TokenId> tokens;  // BOS ... EOS
  double log_prob;
};

/**
 * Exhaustively lists every EOS-terminated sequence of generated length
 * <= budget.max_len with its exact log-probability, in depth-first token-id
 * order. The probabilities sum to at most 1; the residual mass sits on paths
 * that do not terminate within the budget.
 *
 * Refuses to start when predictable_size^max_len exceeds 1e7 leaves
 * (Errc::enumeration_too_large).
 */
std::vector<ScoredSequence> enumerate_sequences(const SequenceModel& model,
                                                const Context& context,
                                                const GenerationBudget& budget);

}  // namespace decodekit::lm
