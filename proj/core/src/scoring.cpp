#include "decodekit/scoring.hpp"

#include <cmath>

#include "decodekit/error.hpp"

namespace decodekit::lm {

TokenDistribution SequenceModel::next(const Context& context,
                                      std::span<const TokenId> prefix) const {
  if (prefix.empty() || prefix.front() != vocab_.bos_id()) {
    raise(Errc::invalid_parameter, "prefix must start with BOS");
  }
  for (TokenId id : prefix) {
    if (!vocab_.valid_id(id)) {
      raise(Errc::unknown_token, "prefix id out of range: " + std::to_string(id));
    }
    if (id == vocab_.eos_id()) {
      raise(Errc::terminated_prefix, "prefix already emitted EOS");
    }
  }
  return step(context, prefix);
}

double sequence_log_prob(const SequenceModel& model, const Context& context,
                         std::span<const TokenId> sequence) {
  const auto& v = model.vocab();
  if (sequence.empty() || sequence.front() != v.bos_id()) {
    raise(Errc::invalid_parameter, "sequence must start with BOS");
  }
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    if (!v.valid_id(sequence[t])) {
      raise(Errc::unknown_token,
            "sequence id out of range: " + std::to_string(sequence[t]));
    }
    if (sequence[t] == v.eos_id() && t + 1 != sequence.size()) {
      raise(Errc::invalid_parameter, "EOS before the end of the sequence");
    }
  }

  double total = 0.0;
  for (std::size_t t = 1; t < sequence.size(); ++t) {
    const auto dist = model.next(context, sequence.first(t));
    total += std::log(dist[sequence[t]]);
  }
  return total;
}

double normalized_log_prob(const SequenceModel& model, const Context& context,
                           std::span<const TokenId> sequence) {
  if (sequence.size() <= 1) {
    raise(Errc::empty_sequence, "no scored tokens after BOS");
  }
  const double lp = sequence_log_prob(model, context, sequence);
  return lp / static_cast<double>(sequence.size() - 1);
}

double perplexity(const SequenceModel& model, const Context& context,
                  std::span<const TokenId> sequence) {
  return std::exp(-normalized_log_prob(model, context, sequence));
}

namespace {

void enumerate_rec(const SequenceModel& model, const Context& context,
                   std::size_t max_len, std::vector<TokenId>& path,
                   double log_prob, std::vector<ScoredSequence>& out) {
  const std::size_t generated = path.size() - 1;
  if (generated >= max_len) return;
  const auto dist = model.next(context, path);
  const TokenId eos = model.vocab().eos_id();
  for (std::size_t id = 0; id < dist.size(); ++id) {
    const double p = dist.probs[id];
    if (p <= 0.0) continue;
    path.push_back(static_cast<TokenId>(id));
    const double lp = log_prob + std::log(p);
    if (static_cast<TokenId>(id) == eos) {
      out.push_back({path, lp});
    } else {
      enumerate_rec(model, context, max_len, path, lp, out);
    }
    path.pop_back();
  }
}

}  // namespace

std::vector<ScoredSequence> enumerate_sequences(const SequenceModel& model,
                                                const Context& context,
                                                const GenerationBudget& budget) {
  const double leaves = std::pow(
      static_cast<double>(model.vocab().predictable_size()),
      static_cast<double>(budget.max_len));
  if (leaves > 1e7) {
    raise(Errc::enumeration_too_large,
          "sequence space exceeds the 1e7-leaf enumeration guard");
  }
  std::vector<ScoredSequence> out;
  std::vector<TokenId> path{model.vocab().bos_id()};
  enumerate_rec(model, context, budget.max_len, path, 0.0, out);
  return out;
}

}  // namespace decodekit::lm
