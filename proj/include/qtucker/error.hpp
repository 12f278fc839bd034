// Copyright 2026 The qtucker Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qtucker {

enum class ErrorCode {
  ZeroVector,
  NotPowerOfTwo,
  NotNormalized,
  DimensionMismatch,
  EmptySet,
  FullSet,
  PartitionMismatch,
  OddQubitCount,
  InfeasibleConstraint,
  InvalidBlockSize,
  InvalidConfig,
  GaugeIdentityViolation,
  AtMaxBlockSize,
  NotUnitary,
  OpaqueWithoutMatrix,
  TooLarge,
  Parse,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::ZeroVector: return "ZeroVector";
  case ErrorCode::NotPowerOfTwo: return "NotPowerOfTwo";
  case ErrorCode::NotNormalized: return "NotNormalized";
  case ErrorCode::DimensionMismatch: return "DimensionMismatch";
  case ErrorCode::EmptySet: return "EmptySet";
  case ErrorCode::FullSet: return "FullSet";
  case ErrorCode::PartitionMismatch: return "PartitionMismatch";
  case ErrorCode::OddQubitCount: return "OddQubitCount";
  case ErrorCode::InfeasibleConstraint: return "InfeasibleConstraint";
  case ErrorCode::InvalidBlockSize: return "InvalidBlockSize";
  case ErrorCode::InvalidConfig: return "InvalidConfig";
  case ErrorCode::GaugeIdentityViolation: return "GaugeIdentityViolation";
  case ErrorCode::AtMaxBlockSize: return "AtMaxBlockSize";
  case ErrorCode::NotUnitary: return "NotUnitary";
  case ErrorCode::OpaqueWithoutMatrix: return "OpaqueWithoutMatrix";
  case ErrorCode::TooLarge: return "TooLarge";
  case ErrorCode::Parse: return "Parse";
  case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above, so
/// callers (and tests) can match on the kind without parsing messages.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace qtucker
