#pragma once

#include <map>
#include <utility>
#include <vector>

#include "decodekit/model.hpp"

namespace decodekit::lm {

/**
 * Sequence model backed by an explicit (context, prefix) -> distribution
 * table, with a default distribution for unlisted prefixes. The exact test
 * oracle of the toolkit: every branch probability is spelled out, so decoded
 * scores can be checked against hand arithmetic and full enumeration.
 */
class TableModel final : public SequenceModel {
 public:
  using Key = std::pair<std::vector<TokenId>, std::vector<TokenId>>;

  TableModel(Vocabulary vocab, TokenDistribution default_dist);

  /// Registers the distribution returned for an exact (context, prefix) hit.
  /// Entries are part of model construction; do not mutate a model that is
  /// already being queried.
  void set(std::vector<TokenId> context, std::vector<TokenId> prefix,
           TokenDistribution dist);

  const std::map<Key, TokenDistribution>& entries() const noexcept {
    return entries_;
  }
  const TokenDistribution& default_dist() const noexcept { return default_; }

 private:
  TokenDistribution step(const Context& context,
                         std::span<const TokenId> prefix) const override;

  std::map<Key, TokenDistribution> entries_;
  TokenDistribution default_;
};

}  // namespace decodekit::lm
