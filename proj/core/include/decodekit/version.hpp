#pragma once

namespace decodekit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace decodekit
