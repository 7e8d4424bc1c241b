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

#pragma once

#include <stdexcept>
#include <string>

namespace ctlo {

enum class ErrorCode {
  kDegenerateInput,
  kEmptyScan,
  kEmptyNeighborhood,
  kDegenerateNeighborhood,
  kTooFewResiduals,
  kSolverFailure,
  kRegistrationFailed,
  kMalformedFile,
  kNoSegments,
  kDegenerateGrid,
  kUnknownScenario,
  kInvalidArgument,
  kIoError,
};

const char* to_string(ErrorCode code);

/** \brief Exception type thrown by every ctlo module. */
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ctlo
