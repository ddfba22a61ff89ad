/*
 * Copyright 2026 The PRISm Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prism {

// Every failure the engine can report. The CLI maps each kind to its own exit
// code, so the numeric values are part of the command-line contract.
enum class ErrorKind : int {
  kInvalidArgument = 1,
  kConfigInvalid,
  kIoFailure,
  kInvalidManifest,
  kMissingBlob,
  kDimMismatch,
  kInvariantViolation,
  kShapeMismatch,
  kBackwardWithoutForward,
  kTapeAlreadyBackpropagated,
  kHeadsDoNotDivide,
  kMissingGrad,
  kEmptyCaptions,
  kMissingGroundTruth,
  kLengthMismatch,
  kTooFewValues,
  kScoreCoverageIncomplete,
  kMissingEdgeEmbedding,
  kEmptyGraph,
  kZeroVisualActivation,
  kInsufficientPairs,
  kEmptyIndex,
  kInsufficientData,
  kCheckpointMismatch,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kConfigInvalid: return "ConfigInvalid";
    case ErrorKind::kIoFailure: return "IoFailure";
    case ErrorKind::kInvalidManifest: return "InvalidManifest";
    case ErrorKind::kMissingBlob: return "MissingBlob";
    case ErrorKind::kDimMismatch: return "DimMismatch";
    case ErrorKind::kInvariantViolation: return "InvariantViolation";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kBackwardWithoutForward: return "BackwardWithoutForward";
    case ErrorKind::kTapeAlreadyBackpropagated: return "TapeAlreadyBackpropagated";
    case ErrorKind::kHeadsDoNotDivide: return "HeadsDoNotDivide";
    case ErrorKind::kMissingGrad: return "MissingGrad";
    case ErrorKind::kEmptyCaptions: return "EmptyCaptions";
    case ErrorKind::kMissingGroundTruth: return "MissingGroundTruth";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kTooFewValues: return "TooFewValues";
    case ErrorKind::kScoreCoverageIncomplete: return "ScoreCoverageIncomplete";
    case ErrorKind::kMissingEdgeEmbedding: return "MissingEdgeEmbedding";
    case ErrorKind::kEmptyGraph: return "EmptyGraph";
    case ErrorKind::kZeroVisualActivation: return "ZeroVisualActivation";
    case ErrorKind::kInsufficientPairs: return "InsufficientPairs";
    case ErrorKind::kEmptyIndex: return "EmptyIndex";
    case ErrorKind::kInsufficientData: return "InsufficientData";
    case ErrorKind::kCheckpointMismatch: return "CheckpointMismatch";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace prism
