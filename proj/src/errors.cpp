// Copyright 2026, The ctlo Authors
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

#include "ctlo/errors.hpp"

namespace ctlo {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kEmptyScan: return "EmptyScan";
    case ErrorCode::kEmptyNeighborhood: return "EmptyNeighborhood";
    case ErrorCode::kDegenerateNeighborhood: return "DegenerateNeighborhood";
    case ErrorCode::kTooFewResiduals: return "TooFewResiduals";
    case ErrorCode::kSolverFailure: return "SolverFailure";
    case ErrorCode::kRegistrationFailed: return "RegistrationFailed";
    case ErrorCode::kMalformedFile: return "MalformedFile";
    case ErrorCode::kNoSegments: return "NoSegments";
    case ErrorCode::kDegenerateGrid: return "DegenerateGrid";
    case ErrorCode::kUnknownScenario: return "UnknownScenario";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace ctlo
