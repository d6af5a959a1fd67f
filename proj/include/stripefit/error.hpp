#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stripefit {

enum class ErrorCode {
  kParse,
  kDuplicateSample,
  kSchema,
  kNoTrials,
  kEmptyFrame,
  kGroupEmpty,
  kInvalidDirection,
  kDegenerateMotion,
  kNoCrossing,
  kInvalidCutoff,
  kShortSeries,
  kInvalidWavelength,
  kNonFiniteObjective,
  kConfiguration,
  kTooLargeGrid,
  kDegenerateFrame,
  kZeroVariance,
  kSampleSize,
  kDomain,
  kIncompleteTable,
  kEmptyGeneration,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stripefit
