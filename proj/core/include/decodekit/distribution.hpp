#pragma once

#include <cstddef>
#include <vector>

#include "decodekit/vocab.hpp"

namespace decodekit {
class RngStream;
}

namespace decodekit::lm {

/**
 * One next-token distribution over the full id space of a Vocabulary.
 *
 * Entries are plain probabilities; a valid distribution sums to 1 within
 * 1e-9 and puts no mass on BOS.
 */
struct TokenDistribution {
  std::vector<double> probs;

  TokenDistribution() = default;
  explicit TokenDistribution(std::vector<double> p) : probs(std::move(p)) {}

  static TokenDistribution one_hot(std::size_t size, TokenId id);

  std::size_t size() const noexcept { return probs.size(); }
  double operator[](TokenId id) const { return probs[static_cast<std::size_t>(id)]; }

  /// Highest-probability id; ties resolve to the lowest id.
  TokenId argmax() const;

  /// Throws Errc::invalid_parameter unless entries are in [0,1] and the
  /// total is 1 within `tolerance`.
  void validate(double tolerance = 1e-9) const;
};

/// Inverse-CDF draw walking ids in ascending order. Deterministic given the
/// stream; documented so the sampling path can be replayed elsewhere.
TokenId sample_token(const TokenDistribution& dist, decodekit::RngStream& rng);

}  // namespace decodekit::lm
