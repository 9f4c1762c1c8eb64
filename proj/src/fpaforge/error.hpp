#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fpaforge {

// Numeric values are part of the C ABI (fpa_status); append only.
enum class ErrorCode : int {
  Ok = 0,
  RangeError = 1,
  MalformedLength = 2,
  ProtocolViolation = 3,
  UnsupportedQoS = 4,
  WildcardInTopic = 5,
  LeadingDollar = 6,
  TooLong = 7,
  Empty = 8,
  InvalidUtf8 = 9,
  EncodeError = 10,
  Incomplete = 11,
  UnknownType = 12,
  MssExceeded = 13,
  NotEstablished = 14,
  BadMagic = 15,
  TruncatedRecord = 16,
  Io = 17,
  BudgetExceeded = 18,
  EmptyPool = 19,
  ConfigError = 20,
  Unstable = 21,
  ZeroVector = 22,
  ZeroVariance = 23,
  DimMismatch = 24,
  SingularCovariance = 25,
  DegenerateSamples = 26,
  DegenerateLabels = 27,
  ConnectRefused = 28,
  ConnackNonZero = 29,
  PubackTimeout = 30,
  InvalidArgument = 31,
  Internal = 32,
};

std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace fpaforge
