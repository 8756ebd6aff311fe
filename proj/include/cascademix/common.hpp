#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cascademix {

inline constexpr const char* kVersion = "0.1.0";

using NodeId = std::uint32_t;

// Raised when an input file or stream violates its format; the message
// carries the offending line or record number.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cascademix
