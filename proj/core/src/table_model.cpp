#include "decodekit/table_model.hpp"

#include "decodekit/error.hpp"

namespace decodekit::lm {

TableModel::TableModel(Vocabulary vocab, TokenDistribution default_dist)
    : SequenceModel(std::move(vocab)), default_(std::move(default_dist)) {
  if (default_.size() != this->vocab().size()) {
    raise(Errc::invalid_parameter, "default distribution size mismatch");
  }
  default_.validate();
}

void TableModel::set(std::vector<TokenId> context, std::vector<TokenId> prefix,
                     TokenDistribution dist) {
  if (dist.size() != vocab().size()) {
    raise(Errc::invalid_parameter, "distribution size mismatch");
  }
  dist.validate();
  entries_[Key{std::move(context), std::move(prefix)}] = std::move(dist);
}

TokenDistribution TableModel::step(const Context& context,
                                   std::span<const TokenId> prefix) const {
  Key key{context.tokens,
          std::vector<TokenId>(prefix.begin(), prefix.end())};
  auto it = entries_.find(key);
  if (it != entries_.end()) return it->second;
  return default_;
}

}  // namespace decodekit::lm
