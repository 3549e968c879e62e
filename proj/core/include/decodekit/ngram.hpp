#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "decodekit/model.hpp"

namespace decodekit::lm {

/// count(context, token) over (order-1)-token contexts. Ordered maps keep
/// serialization and iteration deterministic.
using NGramCountTable =
    std::map<std::vector<TokenId>, std::map<TokenId, std::uint64_t>>;

/**
 * Additively smoothed n-gram language model; the self-contained reference LM
 * used in place of neural models.
 *
 * Conventions:
 *  - contexts are padded with BOS on the left, so every prediction event has
 *    exactly order-1 context tokens;
 *  - each training sequence contributes exactly one EOS event; BOS is
 *    context-only and never predicted;
 *  - p(w | c) = (count(c,w) + k) / (count(c,.) + k * m) with m the
 *    predictable vocabulary size;
 *  - a context never seen in training falls back to the smoothed unigram
 *    distribution (add-one when k = 0, so the fallback always has full
 *    support over predictable tokens).
 *
 * Conditioning tokens are treated as part of the history: the model scores
 * p(y_t | context ++ y_<t>), which is the continuation factorization used by
 * prompt-conditioned tasks.
 */
class NGramModel final : public SequenceModel {
 public:
  NGramModel(Vocabulary vocab, std::size_t order, double smoothing_k,
             NGramCountTable counts);

  std::size_t order() const noexcept { return order_; }
  double smoothing_k() const noexcept { return smoothing_k_; }
  const NGramCountTable& counts() const noexcept { return counts_; }

 private:
  TokenDistribution step(const Context& context,
                         std::span<const TokenId> prefix) const override;

  TokenDistribution conditional(const std::vector<TokenId>& window) const;

  std::size_t order_;
  double smoothing_k_;
  NGramCountTable counts_;
  std::vector<std::uint64_t> unigram_counts_;
  std::uint64_t unigram_total_ = 0;
  double fallback_k_;
};

/**
 * Counts n-grams over the corpus (each sequence wrapped in BOS padding and a
 * final EOS) and returns the smoothed model. When no vocabulary is supplied
 * one is built from the distinct corpus tokens in sorted order.
 *
 * Throws Errc::empty_corpus / Errc::invalid_parameter on bad inputs.
 */
NGramModel train_ngram(const std::vector<std::vector<std::string>>& corpus,
                       std::size_t order, double smoothing_k,
                       std::optional<Vocabulary> vocab = std::nullopt);

}  // namespace decodekit::lm
