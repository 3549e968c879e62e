#include "decodekit/rng.hpp"

#include <string>

namespace decodekit {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void append_le64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = kFnvOffset;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view input_id,
                          std::string_view decoder_label,
                          std::uint64_t sample_index) {
  std::string buf;
  buf.reserve(input_id.size() + decoder_label.size() + 19);
  append_le64(buf, global_seed);
  buf.push_back('\x1f');
  buf.append(input_id);
  buf.push_back('\x1f');
  buf.append(decoder_label);
  buf.push_back('\x1f');
  append_le64(buf, sample_index);
  return fnv1a64(buf);
}

RngStream derive_rng(std::uint64_t global_seed, std::string_view input_id,
                     std::string_view decoder_label,
                     std::uint64_t sample_index) {
  return RngStream(
      derive_seed(global_seed, input_id, decoder_label, sample_index));
}

}  // namespace decodekit
