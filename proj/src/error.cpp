#include "stripefit/error.hpp"

namespace stripefit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kDuplicateSample: return "duplicate-sample";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kNoTrials: return "no-trials";
    case ErrorCode::kEmptyFrame: return "empty-frame";
    case ErrorCode::kGroupEmpty: return "group-empty";
    case ErrorCode::kInvalidDirection: return "invalid-direction";
    case ErrorCode::kDegenerateMotion: return "degenerate-motion";
    case ErrorCode::kNoCrossing: return "no-crossing";
    case ErrorCode::kInvalidCutoff: return "invalid-cutoff";
    case ErrorCode::kShortSeries: return "short-series";
    case ErrorCode::kInvalidWavelength: return "invalid-wavelength";
    case ErrorCode::kNonFiniteObjective: return "non-finite-objective";
    case ErrorCode::kConfiguration: return "configuration";
    case ErrorCode::kTooLargeGrid: return "too-large-grid";
    case ErrorCode::kDegenerateFrame: return "degenerate-frame";
    case ErrorCode::kZeroVariance: return "zero-variance";
    case ErrorCode::kSampleSize: return "sample-size";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kIncompleteTable: return "incomplete-table";
    case ErrorCode::kEmptyGeneration: return "empty-generation";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace stripefit
