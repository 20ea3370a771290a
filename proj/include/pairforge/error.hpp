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

#ifndef PAIRFORGE_ERROR_HPP_
#define PAIRFORGE_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace pairforge {

enum class ErrorKind {
  kIo,
  kLineCountMismatch,
  kEmptySource,
  kEmptyCorpus,
  kEmptyInput,
  kEmptyPool,
  kLengthMismatch,
  kDimensionMismatch,
  kNegativeFactor,
  kInvalidArgument,
  kFormat,
  kServiceUnreachable,
  kTimeout,
  kAlignmentError,
  kMissingArtifact,
  kConfigError,
};

std::string_view ErrorKindName(ErrorKind kind);

// All library failures are reported through this type; kind() identifies the
// failure class named in the module contracts.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace pairforge

#endif  // PAIRFORGE_ERROR_HPP_
