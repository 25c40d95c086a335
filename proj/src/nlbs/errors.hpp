#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace nlbs {

enum class ErrorCode {
  InvalidArgument,
  NotExpandable,
  UnsupportedDelta,
  QuadratureDiverged,
  NoImpliedVol,
  SingularTridiagonal,
  NonConvergence,
  EmptyDomain,
  BracketFail,
  NonMonotonePrice,
  MissingColumn,
  BadNumber,
  EmptyFile,
  CrossedQuote,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure in the library surfaces as an Error carrying a code. Some
/// codes carry a numeric payload: the partial quadrature estimate, the last
/// Newton residual, the failing time level or the offending CSV line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, double value = 0.0, long index = -1)
      : std::runtime_error(std::move(message)), code_(code), value_(value), index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  double value() const noexcept { return value_; }
  long index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  double value_;
  long index_;
};

[[noreturn]] inline void fail(ErrorCode code, std::string message, double value = 0.0,
                              long index = -1) {
  throw Error(code, std::move(message), value, index);
}

inline void require(bool condition, const char* message) {
  if (!condition) fail(ErrorCode::InvalidArgument, message);
}

}  // namespace nlbs
