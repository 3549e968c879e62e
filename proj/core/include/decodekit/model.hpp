#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "decodekit/distribution.hpp"
#include "decodekit/vocab.hpp"

namespace decodekit::lm {

/**
 * Conditioning information for one input. For encoder-style tasks these are
 * the source tokens; for continuation tasks the prompt tokens; empty for
 * unconditional generation. Never contains BOS/EOS.
 */
struct Context {
  std::vector<TokenId> tokens;

  bool empty() const noexcept { return tokens.empty(); }
  bool operator==(const Context&) const = default;
};

/// Generation cap: maximum number of generated tokens, BOS excluded and the
/// terminating EOS included. Decoders require max_len >= 1.
struct GenerationBudget {
  std::size_t max_len = 1;
};

/**
 * A locally normalized sequence model: for any (context, prefix) it yields a
 * distribution over the extended vocabulary. Implementations are immutable
 * after construction and next() is pure, so concurrent read-only queries are
 * safe and every decode is replayable.
 */
class SequenceModel {
 public:
  explicit SequenceModel(Vocabulary vocab) : vocab_(std::move(vocab)) {}
  virtual ~SequenceModel() = default;

  SequenceModel(const SequenceModel&) = delete;
  SequenceModel& operator=(const SequenceModel&) = delete;
  SequenceModel(SequenceModel&&) = default;
  SequenceModel& operator=(SequenceModel&&) = delete;

  const Vocabulary& vocab() const noexcept { return vocab_; }

  /**
   * Next-token distribution given a prefix that starts with BOS and has not
   * emitted EOS yet.
   *
   * Throws Errc::terminated_prefix when the prefix contains EOS and
   * Errc::unknown_token for out-of-range ids.
   */
  TokenDistribution next(const Context& context,
                         std::span<const TokenId> prefix) const;

 private:
  virtual TokenDistribution step(const Context& context,
                                 std::span<const TokenId> prefix) const = 0;

  Vocabulary vocab_;
};

}  // namespace decodekit::lm
