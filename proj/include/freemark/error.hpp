/* Copyright 2026 The FreeMark Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef FREEMARK_ERROR_HPP
#define FREEMARK_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace freemark {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kLengthMismatch,
  kEmptyInput,
  kNonFinite,
  kTrainingDiverged,
  kNothingToTrain,
  kClassUnderpopulated,
  kInvalidLayer,
  kNonConvergence,
  kDegenerateInput,
  kDegenerateActivation,
  kSearchExhausted,
  kIncompatibleArchitecture,
  kTriggerMismatch,
  kNotFound,
  kIntegrityViolation,
  kClaimRejected,
  kFormat,
  kIo,
  kConfig,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kLengthMismatch: return "length-mismatch";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kNonFinite: return "non-finite";
    case ErrorCode::kTrainingDiverged: return "training-diverged";
    case ErrorCode::kNothingToTrain: return "nothing-to-train";
    case ErrorCode::kClassUnderpopulated: return "class-underpopulated";
    case ErrorCode::kInvalidLayer: return "invalid-layer";
    case ErrorCode::kNonConvergence: return "non-convergence";
    case ErrorCode::kDegenerateInput: return "degenerate-input";
    case ErrorCode::kDegenerateActivation: return "degenerate-activation";
    case ErrorCode::kSearchExhausted: return "search-exhausted";
    case ErrorCode::kIncompatibleArchitecture: return "incompatible-architecture";
    case ErrorCode::kTriggerMismatch: return "trigger-mismatch";
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kIntegrityViolation: return "integrity-violation";
    case ErrorCode::kClaimRejected: return "claim-rejected";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the key-matrix solver when the iteration budget runs out.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(std::size_t mismatches, std::size_t iterations)
      : Error(ErrorCode::kNonConvergence,
              std::to_string(mismatches) + " rows still violate sign/margin after " +
                  std::to_string(iterations) + " iterations"),
        mismatches_(mismatches) {}

  std::size_t final_mismatches() const noexcept { return mismatches_; }

 private:
  std::size_t mismatches_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace freemark

#endif  // FREEMARK_ERROR_HPP
