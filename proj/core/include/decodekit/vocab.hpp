#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace decodekit::lm {

using TokenId = std::int32_t;

/**
 * Closed token inventory shared by a model and everything decoding from it.
 *
 * Ids are dense 0..size()-1. The inventory always contains the reserved
 * BOS and EOS markers; BOS is context-only and never a prediction target,
 * so the "predictable" vocabulary (regular tokens plus EOS) has
 * size() - 1 entries.
 */
class Vocabulary {
 public:
  static constexpr std::string_view kBosText = "<bos>";
  static constexpr std::string_view kEosText = "<eos>";

  Vocabulary(std::vector<std::string> tokens, TokenId bos_id, TokenId eos_id);

  /// Builds [<bos>, <eos>, words...] keeping the given word order.
  static Vocabulary from_words(const std::vector<std::string>& words);

  std::size_t size() const noexcept { return tokens_.size(); }
  /// Everything a model may emit: regular tokens plus EOS, excluding BOS.
  std::size_t predictable_size() const noexcept { return tokens_.size() - 1; }

  TokenId bos_id() const noexcept { return bos_id_; }
  TokenId eos_id() const noexcept { return eos_id_; }

  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  /// find() that throws Errc::unknown_token on a miss.
  TokenId id_of(std::string_view token) const;
  bool valid_id(TokenId id) const noexcept {
    return id >= 0 && static_cast<std::size_t>(id) < tokens_.size();
  }

  std::vector<TokenId> to_ids(const std::vector<std::string>& tokens) const;
  /// Renders ids as a space-joined string, skipping BOS/EOS.
  std::string render(std::span<const TokenId> ids) const;
  /// Token strings for ids with BOS/EOS stripped.
  std::vector<std::string> content_strings(std::span<const TokenId> ids) const;

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  bool operator==(const Vocabulary& other) const noexcept {
    return tokens_ == other.tokens_ && bos_id_ == other.bos_id_ &&
           eos_id_ == other.eos_id_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId bos_id_;
  TokenId eos_id_;
};

/// Whitespace tokenization; the toolkit treats whitespace-separated units
/// as tokens and performs no further normalization.
std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(std::span<const std::string> tokens);

}  // namespace decodekit::lm
