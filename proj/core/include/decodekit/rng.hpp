#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace decodekit {

/**
 * Deterministic random stream with a documented wire contract, so that an
 * independent implementation can reproduce every draw byte for byte:
 *
 *  - generator: std::mt19937_64 as specified by the C++ standard, seeded
 *    with the 64-bit value below;
 *  - uniform(): (next_u64() >> 11) * 2^-53, a double in [0, 1);
 *  - below(n):  next_u64() % n.
 *
 * Stream seeds are derived with 64-bit FNV-1a over the byte string
 *
 *   LE64(global_seed) 0x1F input_id 0x1F decoder_label 0x1F LE64(sample_index)
 *
 * so any (seed, input, decoder, sample) tuple maps to the same stream no
 * matter which worker draws from it.
 */
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). Plain modulo draw; the bias is irrelevant
  /// here and the arithmetic is trivially reproducible.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::mt19937_64 gen_;
};

std::uint64_t fnv1a64(std::string_view bytes);

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view input_id,
                          std::string_view decoder_label,
                          std::uint64_t sample_index);

RngStream derive_rng(std::uint64_t global_seed, std::string_view input_id,
                     std::string_view decoder_label,
                     std::uint64_t sample_index);

}  // namespace decodekit
