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


#include "wlc/error.hpp"

namespace wlc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::DtypeMismatch: return "DtypeMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::TooFewTrials: return "TooFewTrials";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ClassAbsent: return "ClassAbsent";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::MissingArchive: return "MissingArchive";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Usage:
      return 1;
    case ErrorCode::NoConvergence:
      return 3;
    default:
      return 2;
  }
}

}  // namespace wlc
