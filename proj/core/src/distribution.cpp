#include "decodekit/distribution.hpp"

#include <cmath>

#include "decodekit/error.hpp"
#include "decodekit/rng.hpp"

namespace decodekit::lm {

TokenDistribution TokenDistribution::one_hot(std::size_t size, TokenId id) {
  TokenDistribution d;
  d.probs.assign(size, 0.0);
  d.probs.at(static_cast<std::size_t>(id)) = 1.0;
  return d;
}

TokenId TokenDistribution::argmax() const {
  if (probs.empty()) raise(Errc::invalid_parameter, "empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;  // strict: ties keep the lower id
  }
  return static_cast<TokenId>(best);
}

void TokenDistribution::validate(double tolerance) const {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || p > 1.0 + tolerance) {
      raise(Errc::invalid_parameter, "probability outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > tolerance) {
    raise(Errc::invalid_parameter,
          "distribution sums to " + std::to_string(sum));
  }
}

TokenId sample_token(const TokenDistribution& dist, decodekit::RngStream& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  TokenId last_positive = -1;
  for (std::size_t i = 0; i < dist.probs.size(); ++i) {
    const double p = dist.probs[i];
    if (p <= 0.0) continue;
    cum += p;
    last_positive = static_cast<TokenId>(i);
    if (u < cum) return last_positive;
  }
  if (last_positive < 0) {
    raise(Errc::invalid_parameter, "cannot sample from all-zero distribution");
  }
  return last_positive;  // u fell into rounding slack at the top end
}

}  // namespace decodekit::lm
