#include "decodekit/ngram.hpp"

#include <algorithm>
#include <set>

#include "decodekit/error.hpp"

namespace decodekit::lm {

NGramModel::NGramModel(Vocabulary vocab, std::size_t order, double smoothing_k,
                       NGramCountTable counts)
    : SequenceModel(std::move(vocab)),
      order_(order),
      smoothing_k_(smoothing_k),
      counts_(std::move(counts)),
      fallback_k_(smoothing_k > 0.0 ? smoothing_k : 1.0) {
  if (order_ < 1) raise(Errc::invalid_parameter, "order must be >= 1");
  if (smoothing_k_ < 0.0) {
    raise(Errc::invalid_parameter, "smoothing_k must be >= 0");
  }
  unigram_counts_.assign(this->vocab().size(), 0);
  for (const auto& [ctx, events] : counts_) {
    if (ctx.size() + 1 != order_) {
      raise(Errc::invalid_parameter, "count table context length mismatch");
    }
    for (const auto& [tok, n] : events) {
      if (!this->vocab().valid_id(tok) || tok == this->vocab().bos_id()) {
        raise(Errc::invalid_parameter, "count table predicts an illegal token");
      }
      unigram_counts_[static_cast<std::size_t>(tok)] += n;
      unigram_total_ += n;
    }
  }
}

TokenDistribution NGramModel::conditional(
    const std::vector<TokenId>& window) const {
  const auto& v = vocab();
  const double m = static_cast<double>(v.predictable_size());
  TokenDistribution dist;
  dist.probs.assign(v.size(), 0.0);

  auto it = counts_.find(window);
  if (it != counts_.end()) {
    double total = 0.0;
    for (const auto& [tok, n] : it->second) total += static_cast<double>(n);
    const double denom = total + smoothing_k_ * m;
    for (std::size_t id = 0; id < v.size(); ++id) {
      if (static_cast<TokenId>(id) == v.bos_id()) continue;
      double count = 0.0;
      auto ct = it->second.find(static_cast<TokenId>(id));
      if (ct != it->second.end()) count = static_cast<double>(ct->second);
      dist.probs[id] = (count + smoothing_k_) / denom;
    }
    return dist;
  }

  // Unseen context: smoothed unigram backoff (full support by construction).
  const double denom = static_cast<double>(unigram_total_) + fallback_k_ * m;
  for (std::size_t id = 0; id < v.size(); ++id) {
    if (static_cast<TokenId>(id) == v.bos_id()) continue;
    dist.probs[id] =
        (static_cast<double>(unigram_counts_[id]) + fallback_k_) / denom;
  }
  return dist;
}

TokenDistribution NGramModel::step(const Context& context,
                                   std::span<const TokenId> prefix) const {
  // History = BOS padding ++ conditioning tokens ++ generated tokens; the
  // window is its last order-1 entries.
  std::vector<TokenId> window;
  if (order_ > 1) {
    const std::size_t width = order_ - 1;
    std::vector<TokenId> history;
    history.assign(width, vocab().bos_id());
    history.insert(history.end(), context.tokens.begin(), context.tokens.end());
    history.insert(history.end(), prefix.begin() + 1, prefix.end());
    window.assign(history.end() - static_cast<std::ptrdiff_t>(width),
                  history.end());
  }
  return conditional(window);
}

NGramModel train_ngram(const std::vector<std::vector<std::string>>& corpus,
                       std::size_t order, double smoothing_k,
                       std::optional<Vocabulary> vocab) {
  if (corpus.empty()) raise(Errc::empty_corpus, "training corpus is empty");
  if (order < 1) raise(Errc::invalid_parameter, "order must be >= 1");
  if (smoothing_k < 0.0) {
    raise(Errc::invalid_parameter, "smoothing_k must be >= 0");
  }

  if (!vocab) {
    std::set<std::string> words;
    for (const auto& seq : corpus) words.insert(seq.begin(), seq.end());
    vocab = Vocabulary::from_words(
        std::vector<std::string>(words.begin(), words.end()));
  }

  NGramCountTable counts;
  const TokenId bos = vocab->bos_id();
  const TokenId eos = vocab->eos_id();
  for (const auto& seq : corpus) {
    std::vector<TokenId> padded(order - 1, bos);
    for (const auto& w : seq) padded.push_back(vocab->id_of(w));
    padded.push_back(eos);

    const std::size_t width = order - 1;
    for (std::size_t t = width; t < padded.size(); ++t) {
      std::vector<TokenId> ctx(padded.begin() + static_cast<std::ptrdiff_t>(t - width),
                               padded.begin() + static_cast<std::ptrdiff_t>(t));
      counts[ctx][padded[t]] += 1;
    }
  }

  return NGramModel(std::move(*vocab), order, smoothing_k, std::move(counts));
}

}  // namespace decodekit::lm
