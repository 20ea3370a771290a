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

#ifndef PAIRFORGE_MERT_HPP_
#define PAIRFORGE_MERT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "pairforge/decode.hpp"
#include "pairforge/metrics.hpp"

namespace pairforge {

struct PoolEntry {
  Sentence target;
  FeatureVector features{};
  BleuStats stats;
};

// Accumulated n-best hypotheses per dev sentence with their BLEU statistics
// against the sentence's reference.
class NBestPool {
 public:
  explicit NBestPool(std::vector<Sentence> refs);

  // Adds hypotheses not already present (same target and features); returns
  // how many were new.
  std::size_t add(std::size_t sentence, const NBestList& list);
  std::size_t add(std::size_t sentence, const Sentence& target,
                  const FeatureVector& features);

  std::size_t sentences() const { return entries_.size(); }
  std::size_t size() const;
  bool empty() const { return size() == 0; }
  const std::vector<PoolEntry>& entries(std::size_t sentence) const {
    return entries_[sentence];
  }
  const std::vector<Sentence>& refs() const { return refs_; }

  // Index of the highest-scoring entry per sentence (first on ties).
  std::vector<std::size_t> select(const FeatureVector& weights) const;
  BleuStats stats(const FeatureVector& weights) const;
  double bleu(const FeatureVector& weights) const { return stats(weights).score(); }

 private:
  std::vector<Sentence> refs_;
  std::vector<std::vector<PoolEntry>> entries_;
  std::vector<std::set<std::string>> seen_;
};

struct LineSearchResult {
  double gamma = 0.0;
  double bleu = 0.0;
  // Interval boundaries of the merged envelope, ascending.
  std::vector<double> boundaries;
};

// Exact line search along weights + gamma * direction. Per sentence the upper
// envelope of score lines is built; corpus BLEU is evaluated per interval of
// the merged boundaries and the midpoint of the best interval is returned
// (boundary -/+ 1 for the unbounded ends). gamma stays 0 unless some interval
// strictly beats the current weights. gamma is confined to [min_gamma,
// max_gamma]. Throws Error(kEmptyPool) or Error(kInvalidArgument) for a zero
// direction.
LineSearchResult line_search(
    const NBestPool& pool, const FeatureVector& weights,
    const FeatureVector& direction,
    double min_gamma = -std::numeric_limits<double>::infinity(),
    double max_gamma = std::numeric_limits<double>::infinity());

struct MertConfig {
  int outer_iters = 10;
  // Coordinate directions plus (directions_per_iter - 7) random ones.
  int directions_per_iter = 12;
  std::size_t nbest_size = 100;
  int max_inner_rounds = 10;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct MertState {
  LogLinearWeights weights;
  NBestPool pool{{}};
  int iteration = 0;
  // Pooled BLEU of the accepted weights after each outer iteration.
  std::vector<double> dev_bleu_history;
  // Pooled BLEU of the previously accepted weights on the same pool, recorded
  // before each optimization.
  std::vector<double> dev_bleu_before;
};

// Iterative MERT: decode n-best lists, merge them into the pool, optimize on
// the pool, L1-normalize. Stops early when decoding adds no new hypotheses.
MertState mert_tune(const ParallelCorpus& dev, const SmtSystem& system,
                    const LogLinearWeights& init, const MertConfig& config = {});

// Seeded sample of `size` pairs (all pairs when the corpus is smaller),
// returned in corpus order.
ParallelCorpus sample_dev(const ParallelCorpus& corpus, std::size_t size,
                          std::uint64_t seed);

inline constexpr std::size_t kDefaultDevSize = 5000;

// iteration,dev_bleu
void write_mert_log(const std::filesystem::path& path, const MertState& state);

}  // namespace pairforge

#endif  // PAIRFORGE_MERT_HPP_
