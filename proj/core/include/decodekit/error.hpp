#pragma once

#include <stdexcept>
#include <string>

namespace decodekit {

/// Machine-checkable failure categories used across the toolkit.
enum class Errc {
  // sequence models
  terminated_prefix,
  unknown_token,
  empty_sequence,
  enumeration_too_large,
  empty_corpus,
  // decoders / shared
  invalid_parameter,
  // metrics
  undefined_metric,
  invalid_set,
  invalid_reference,
  insufficient_samples,
  // analysis
  zero_variance,
  pairing_mismatch,
  invalid_pvalue,
  missing_rating,
  insufficient_data,
  key_mismatch,
  // harness
  config,
  io,
  format,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace decodekit
