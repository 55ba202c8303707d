// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace causalflow {

enum class ErrorCode {
  CycleDetected,
  IndexOutOfRange,
  DuplicateEdge,
  ScheduleOutOfWindow,
  NumericOverflow,
  AbductionUnsolvable,
  OffsetTooSmall,
  ShapeMismatch,
  NonFiniteValue,
  NonScalarLoss,
  EmptyContext,
  MissingNodeValue,
  NonFiniteTrajectory,
  SOutOfRange,
  EmptyForecastWindow,
  DivergingLoss,
  ModelDagMismatch,
  FactualLengthMismatch,
  ZeroContextStd,
  DegenerateSample,
  SampleTooSmall,
  InvalidConfig,
  IoError,
  ChecksumMismatch,
  ScheduleParseError,
  AlignmentError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::ScheduleOutOfWindow: return "ScheduleOutOfWindow";
    case ErrorCode::NumericOverflow: return "NumericOverflow";
    case ErrorCode::AbductionUnsolvable: return "AbductionUnsolvable";
    case ErrorCode::OffsetTooSmall: return "OffsetTooSmall";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NonScalarLoss: return "NonScalarLoss";
    case ErrorCode::EmptyContext: return "EmptyContext";
    case ErrorCode::MissingNodeValue: return "MissingNodeValue";
    case ErrorCode::NonFiniteTrajectory: return "NonFiniteTrajectory";
    case ErrorCode::SOutOfRange: return "SOutOfRange";
    case ErrorCode::EmptyForecastWindow: return "EmptyForecastWindow";
    case ErrorCode::DivergingLoss: return "DivergingLoss";
    case ErrorCode::ModelDagMismatch: return "ModelDagMismatch";
    case ErrorCode::FactualLengthMismatch: return "FactualLengthMismatch";
    case ErrorCode::ZeroContextStd: return "ZeroContextStd";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::SampleTooSmall: return "SampleTooSmall";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::ScheduleParseError: return "ScheduleParseError";
    case ErrorCode::AlignmentError: return "AlignmentError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace causalflow
