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

#include "pairforge/mtclient.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "pairforge/error.hpp"

namespace pairforge {

namespace {

struct BatchFailure {
  bool timeout = false;
  std::string message;
};

std::vector<Sentence> translate_batch(const ExternalService& svc,
                                      std::span<const Sentence> batch) {
  nlohmann::json request;
  request["texts"] = nlohmann::json::array();
  for (const auto& s : batch) request["texts"].push_back(detokenize(s));
  const std::string body = request.dump();

  BatchFailure last;
  auto backoff = svc.initial_backoff;
  for (int attempt = 0; attempt <= svc.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Client client(svc.endpoint);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(svc.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(svc.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!svc.bearer_token.empty())
      headers.emplace("Authorization", "Bearer " + svc.bearer_token);

    auto res = client.Post("/translate", headers, body, "application/json");
    if (!res) {
      auto err = res.error();
      last = {err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read,
              httplib::to_string(err)};
      continue;
    }
    if (res->status != 200) {
      last = {false, "HTTP status " + std::to_string(res->status)};
      continue;
    }
    try {
      auto reply = nlohmann::json::parse(res->body);
      const auto& translations = reply.at("translations");
      if (!translations.is_array() || translations.size() != batch.size()) {
        last = {false, "response has wrong number of translations"};
        continue;
      }
      std::vector<Sentence> out;
      out.reserve(batch.size());
      for (const auto& t : translations)
        out.push_back(tokenize(normalize_nfc(t.get<std::string>())));
      return out;
    } catch (const nlohmann::json::exception& e) {
      last = {false, std::string("malformed response: ") + e.what()};
    }
  }
  throw Error(last.timeout ? ErrorKind::kTimeout : ErrorKind::kServiceUnreachable,
              svc.endpoint + " after " + std::to_string(svc.max_retries) +
                  " retries: " + last.message);
}

std::vector<Sentence> from_gold(const GoldReference& gold,
                                std::span<const Sentence> sources,
                                std::size_t first_id) {
  if (!gold.corpus) throw Error(ErrorKind::kAlignmentError, "no gold corpus");
  const auto& pairs = gold.corpus->pairs;
  if (first_id + sources.size() > pairs.size()) {
    throw Error(ErrorKind::kAlignmentError,
                "gold corpus has " + std::to_string(pairs.size()) +
                    " pairs, requested up to " +
                    std::to_string(first_id + sources.size()));
  }
  std::vector<Sentence> out;
  out.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& pair = pairs[first_id + i];
    if (pair.source != sources[i]) {
      throw Error(ErrorKind::kAlignmentError,
                  "source " + std::to_string(first_id + i) +
                      " does not match the gold corpus");
    }
    out.push_back(pair.target);
  }
  return out;
}

std::vector<Sentence> from_service(const ExternalService& svc,
                                   std::span<const Sentence> sources) {
  if (svc.endpoint.empty())
    throw Error(ErrorKind::kServiceUnreachable, "no translation endpoint configured");
  const std::size_t batch = std::max<std::size_t>(1, svc.batch_size);
  const std::size_t batches = (sources.size() + batch - 1) / batch;
  std::vector<std::vector<Sentence>> results(batches);
  parallel_for(batches, svc.max_in_flight, [&](std::size_t b) {
    std::size_t begin = b * batch;
    std::size_t len = std::min(batch, sources.size() - begin);
    results[b] = translate_batch(svc, sources.subspan(begin, len));
  });
  std::vector<Sentence> out;
  out.reserve(sources.size());
  for (auto& r : results)
    for (auto& s : r) out.push_back(std::move(s));
  return out;
}

}  // namespace

ExternalService ExternalService::from_env(std::string fallback) {
  ExternalService svc;
  const char* env = std::getenv(kEndpointEnvVar);
  svc.endpoint = env && *env ? std::string(env) : std::move(fallback);
  return svc;
}

std::vector<Sentence> good_sentences(const GoodProvider& provider,
                                     std::span<const Sentence> sources,
                                     std::size_t first_id) {
  if (sources.empty()) throw Error(ErrorKind::kEmptyInput, "no sources");
  return std::visit(
      [&](const auto& p) -> std::vector<Sentence> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GoldReference>) {
          return from_gold(p, sources, first_id);
        } else if constexpr (std::is_same_v<T, ExternalService>) {
          return from_service(p, sources);
        } else {
          if (!p.system) throw Error(ErrorKind::kInvalidArgument, "no local system");
          return p.system->translate_batch(sources, p.threads);
        }
      },
      provider);
}

}  // namespace pairforge
