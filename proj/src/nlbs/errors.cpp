#include "nlbs/errors.hpp"

namespace nlbs {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotExpandable: return "NotExpandable";
    case ErrorCode::UnsupportedDelta: return "UnsupportedDelta";
    case ErrorCode::QuadratureDiverged: return "QuadratureDiverged";
    case ErrorCode::NoImpliedVol: return "NoImpliedVol";
    case ErrorCode::SingularTridiagonal: return "SingularTridiagonal";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::EmptyDomain: return "EmptyDomain";
    case ErrorCode::BracketFail: return "BracketFail";
    case ErrorCode::NonMonotonePrice: return "NonMonotonePrice";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::BadNumber: return "BadNumber";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::CrossedQuote: return "CrossedQuote";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace nlbs
