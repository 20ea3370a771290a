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

#include "pairforge/error.hpp"

namespace pairforge {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kLineCountMismatch: return "LineCountMismatch";
    case ErrorKind::kEmptySource: return "EmptySource";
    case ErrorKind::kEmptyCorpus: return "EmptyCorpus";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kEmptyPool: return "EmptyPool";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kNegativeFactor: return "NegativeFactor";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kFormat: return "FormatError";
    case ErrorKind::kServiceUnreachable: return "ServiceUnreachable";
    case ErrorKind::kTimeout: return "Timeout";
    case ErrorKind::kAlignmentError: return "AlignmentError";
    case ErrorKind::kMissingArtifact: return "MissingArtifact";
    case ErrorKind::kConfigError: return "ConfigError";
  }
  return "Error";
}

}  // namespace pairforge
