#include "decodekit/vocab.hpp"

#include <algorithm>

#include "decodekit/error.hpp"

namespace decodekit::lm {

Vocabulary::Vocabulary(std::vector<std::string> tokens, TokenId bos_id,
                       TokenId eos_id)
    : tokens_(std::move(tokens)), bos_id_(bos_id), eos_id_(eos_id) {
  if (tokens_.empty() || bos_id_ == eos_id_ || !valid_id(bos_id_) ||
      !valid_id(eos_id_)) {
    raise(Errc::invalid_parameter, "vocabulary needs distinct BOS/EOS ids");
  }
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    auto [_, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) {
      raise(Errc::invalid_parameter, "duplicate token: " + tokens_[i]);
    }
  }
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
  std::vector<std::string> tokens;
  tokens.reserve(words.size() + 2);
  tokens.emplace_back(kBosText);
  tokens.emplace_back(kEosText);
  for (const auto& w : words) {
    if (w == kBosText || w == kEosText) {
      raise(Errc::invalid_parameter, "reserved marker used as word: " + w);
    }
    tokens.push_back(w);
  }
  return Vocabulary(std::move(tokens), 0, 1);
}

const std::string& Vocabulary::token(TokenId id) const {
  if (!valid_id(id)) {
    raise(Errc::unknown_token, "token id out of range: " + std::to_string(id));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id_of(std::string_view token) const {
  auto id = find(token);
  if (!id) {
    raise(Errc::unknown_token, "token not in vocabulary: " + std::string(token));
  }
  return *id;
}

std::vector<TokenId> Vocabulary::to_ids(
    const std::vector<std::string>& tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id_of(t));
  return ids;
}

std::string Vocabulary::render(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id == bos_id_ || id == eos_id_) continue;
    if (!out.empty()) out.push_back(' ');
    out += token(id);
  }
  return out;
}

std::vector<std::string> Vocabulary::content_strings(
    std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) {
    if (id == bos_id_ || id == eos_id_) continue;
    out.push_back(token(id));
  }
  return out;
}

}  // namespace decodekit::lm
