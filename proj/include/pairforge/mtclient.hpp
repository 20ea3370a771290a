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

#ifndef PAIRFORGE_MTCLIENT_HPP_
#define PAIRFORGE_MTCLIENT_HPP_

#include <chrono>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pairforge/decode.hpp"
#include "pairforge/textcore.hpp"

namespace pairforge {

inline constexpr const char* kEndpointEnvVar = "PAIRFORGE_MT_ENDPOINT";

// Ground-truth targets of a parallel corpus; the sources passed to
// good_sentences must be the corpus sources, in order.
struct GoldReference {
  std::shared_ptr<const ParallelCorpus> corpus;
};

// Client for an HTTP translation service:
//   POST <endpoint>/translate  {"texts": [...]}  ->  200 {"translations": [...]}
// Any other status or a malformed body is a transient failure.
struct ExternalService {
  std::string endpoint;  // e.g. http://127.0.0.1:8080
  std::chrono::milliseconds timeout{30000};
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{200};
  std::string bearer_token;

  // The endpoint from PAIRFORGE_MT_ENDPOINT when set, else `fallback`.
  static ExternalService from_env(std::string fallback = {});
};

// A tuned SMT system used at full weight.
struct LocalTuned {
  std::shared_ptr<const SmtSystem> system;
  std::size_t threads = 1;
};

using GoodProvider = std::variant<GoldReference, ExternalService, LocalTuned>;

// One good sentence per source, in source order. `first_id` is the corpus
// index of sources[0] (GoldReference only). Throws Error(kEmptyInput),
// Error(kAlignmentError), Error(kServiceUnreachable) or Error(kTimeout).
std::vector<Sentence> good_sentences(const GoodProvider& provider,
                                     std::span<const Sentence> sources,
                                     std::size_t first_id = 0);

}  // namespace pairforge

#endif  // PAIRFORGE_MTCLIENT_HPP_
