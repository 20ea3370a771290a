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

#ifndef PAIRFORGE_TOYDATA_HPP_
#define PAIRFORGE_TOYDATA_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pairforge/textcore.hpp"

namespace pairforge {

// Template-grammar bilingual corpus. The source language is verb-final, puts
// adjectives after nouns and marks plurals with a suffix; the English side
// reorders both, chooses between synonyms by noun class, and inflects verbs
// and articles for agreement.
struct ToyGrammarOptions {
  std::size_t pairs = 5000;
  std::uint64_t seed = 7;
  double adjective_rate = 0.5;
  double plural_rate = 0.4;
};

ParallelCorpus toy_parallel(const ToyGrammarOptions& options);

struct ToyDataset {
  ParallelCorpus train;
  ParallelCorpus dev;
  ParallelCorpus test;
  std::vector<Sentence> monolingual;  // source side only
  std::vector<Sentence> english;      // target side only
};

ToyDataset toy_dataset(std::size_t train, std::size_t dev, std::size_t test,
                       std::size_t monolingual, std::uint64_t seed);

// train.src train.tgt dev.src dev.tgt test.src test.tgt mono.src english.txt
void write_toy_dataset(const std::filesystem::path& dir, const ToyDataset& data);

}  // namespace pairforge

#endif  // PAIRFORGE_TOYDATA_HPP_
