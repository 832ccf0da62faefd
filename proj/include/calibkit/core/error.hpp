// Copyright 2026 The calibkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CALIBKIT_CORE_ERROR_HPP
#define CALIBKIT_CORE_ERROR_HPP

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

namespace calibkit {

enum class ErrorCode {
  kInvalidArgument,
  kNoData,
  kInsufficientData,
  kMissingAttribute,
  kEmptyResult,
  kNoOverlap,
  kSceneUnsuitable,
  kRankDeficient,
  kUnderDetermined,
  kNonMonotonicTime,
  kPreconditionViolation,
  kParse,
  kIo,
};

inline constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kNoData: return "no_data";
    case ErrorCode::kInsufficientData: return "insufficient_data";
    case ErrorCode::kMissingAttribute: return "missing_attribute";
    case ErrorCode::kEmptyResult: return "empty_result";
    case ErrorCode::kNoOverlap: return "no_overlap";
    case ErrorCode::kSceneUnsuitable: return "scene_unsuitable";
    case ErrorCode::kRankDeficient: return "rank_deficient";
    case ErrorCode::kUnderDetermined: return "under_determined";
    case ErrorCode::kNonMonotonicTime: return "non_monotonic_time";
    case ErrorCode::kPreconditionViolation: return "precondition_violation";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

/// Base exception for every failure raised by the library. The code is stable
/// and is what session histories and reports record.
class CalibError : public std::runtime_error {
 public:
  CalibError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the adjustment when the normal matrix is (numerically) singular.
/// `null_direction` is the eigenvector of the smallest eigenvalue expanded to
/// the full parameter order (alpha_x, alpha_y, alpha_z, t_x, t_y, t_z); fixed
/// parameters carry 0.
class RankDeficiencyError : public CalibError {
 public:
  RankDeficiencyError(const std::string& message, std::array<double, 6> null_direction,
                      double condition_number)
      : CalibError(ErrorCode::kRankDeficient, message),
        null_direction_(null_direction),
        condition_number_(condition_number) {}

  const std::array<double, 6>& null_direction() const noexcept { return null_direction_; }
  double condition_number() const noexcept { return condition_number_; }

 private:
  std::array<double, 6> null_direction_;
  double condition_number_;
};

}  // namespace calibkit

#endif  // CALIBKIT_CORE_ERROR_HPP
