// Copyright 2026 The wlclass Authors
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

namespace wlc {

enum class ErrorCode {
  // archive / array format
  BadMagic,
  UnsupportedVersion,
  MalformedHeader,
  UnsupportedDtype,
  MissingKey,
  ShapeMismatch,
  LabelOutOfRange,
  DtypeMismatch,
  IoError,
  // raw telemetry
  SchemaMismatch,
  EmptyFile,
  // windowing
  TooShort,
  TooFewTrials,
  // numerics / models
  DegenerateInput,
  RankDeficient,
  EmptyInput,
  NoConvergence,
  ClassAbsent,
  NotPositiveDefinite,
  CorruptModel,
  // protocol
  BadK,
  MissingArchive,
  InvalidArgument,
  Usage,
};

std::string_view to_string(ErrorCode code);

/// Typed failure raised by every module. `what()` carries the detail message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Process exit status for a failure: 1 usage, 3 non-convergence, 2 otherwise.
int exit_code_for(ErrorCode code);

}  // namespace wlc
