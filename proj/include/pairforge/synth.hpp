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

#ifndef PAIRFORGE_SYNTH_HPP_
#define PAIRFORGE_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pairforge/decode.hpp"
#include "pairforge/mert.hpp"
#include "pairforge/metrics.hpp"
#include "pairforge/mtclient.hpp"
#include "pairforge/pair_record.hpp"
#include "pairforge/wordlists.hpp"

namespace pairforge {

inline constexpr double kDefaultEditRateThreshold = 0.6;
inline constexpr double kDefaultLmScale = 0.8;

// ---------------------------------------------------------------- filtering

struct GeneratorCounts {
  std::size_t total = 0;
  std::size_t retained = 0;
  std::size_t dropped = 0;
};

struct DropReport {
  std::size_t total = 0;
  std::size_t retained = 0;
  std::size_t dropped = 0;
  std::map<Generator, GeneratorCounts> per_generator;

  DropReport& operator+=(const DropReport& o);
  std::string to_json() const;
};

// Keeps records whose edit rate is <= threshold (strictly greater is dropped).
class PairFilter {
 public:
  // Throws Error(kInvalidArgument) unless threshold > 0.
  explicit PairFilter(double threshold = kDefaultEditRateThreshold, bool enabled = true);

  bool accept(const PairRecord& record);
  const DropReport& report() const { return report_; }

 private:
  double threshold_;
  bool enabled_;
  DropReport report_;
};

using RecordSink = std::function<void(const PairRecord&)>;

DropReport filter_pairs(std::span<const PairRecord> records, double threshold,
                        const RecordSink& retained);

// ---------------------------------------------------------------- generation

using SentenceStream = std::function<std::optional<Sentence>()>;
using PairStream = std::function<std::optional<SentencePair>()>;

struct SynthesisOptions {
  double threshold = kDefaultEditRateThreshold;
  bool filter = true;
  // Sentences held in memory at once.
  std::size_t batch_size = 256;
  std::size_t threads = 1;
  // Stop after this many source sentences (0 = no limit).
  std::size_t limit = 0;
  // source_id of the first sentence.
  std::size_t first_id = 0;
};

// poor = beginner translation, good = provider output. Tagged SMT_GOLD for a
// GoldReference provider and SMT_NMT otherwise. Memory is bounded by
// batch_size. Blank source lines are skipped but keep their ids.
DropReport generate_pairs(const SentenceStream& sources, const SmtSystem& beginner,
                          const GoodProvider& good, const SynthesisOptions& options,
                          const RecordSink& sink);

// Streaming SMT_GOLD generation from a parallel stream; each batch is checked
// against a GoldReference built from the batch's own pairs.
DropReport generate_gold_pairs(const PairStream& pairs, const SmtSystem& beginner,
                               const SynthesisOptions& options, const RecordSink& sink);

// ---------------------------------------------------------------- corruption

enum class CorruptionAction {
  kDelete,
  kDuplicate,
  kSwapAdjacent,
  kInflectionSubstitute,
  kDeterminerDrop,
};

enum class TokenMatch {
  kAny,
  kWord,          // alphabetic token
  kDeterminer,
  kInflectable,   // known verb form or a pluralizable lowercase word
};

struct CorruptionRule {
  CorruptionAction action = CorruptionAction::kDelete;
  TokenMatch match = TokenMatch::kWord;
  double probability = 0.0;
};

struct CorruptionRuleSet {
  std::vector<CorruptionRule> rules;  // applied in order

  // determiner-drop 0.15, inflection-substitute 0.15, swap-adjacent 0.05,
  // duplicate 0.05, delete 0.1.
  static CorruptionRuleSet defaults();
  // Throws Error(kInvalidArgument) for a probability outside [0, 1].
  void validate() const;

  // [{"action": "delete", "match": "word", "probability": 0.1}, ...]
  static CorruptionRuleSet from_json(const std::string& text);
  std::string to_json() const;
};

std::string_view action_name(CorruptionAction a);
std::string_view match_name(TokenMatch m);

// poor = rules applied in order with randomness from `seed`, good = the input.
// A token next to an already corrupted position is never corrupted again, and
// the sentence is never emptied. Deterministic given (sentence, rules, seed).
PairRecord corrupt(const Sentence& sentence, const CorruptionRuleSet& rules,
                   std::uint64_t seed, std::size_t source_id = 0,
                   const WordLists& lists = WordLists::defaults());

// Per-sentence seed derived from a run seed and the sentence id.
std::uint64_t sentence_seed(std::uint64_t seed, std::size_t id);

// ---------------------------------------------------------------- round trip

// poor = rev(fwd(sentence)), good = sentence.
PairRecord roundtrip(const Sentence& sentence, const SmtSystem& fwd,
                     const SmtSystem& rev, std::size_t source_id = 0);

// ---------------------------------------------------------------- training

struct SmtTrainingConfig {
  int lm_order = 3;
  int em_iterations = 10;
  std::size_t max_phrase_len = kDefaultMaxPhraseLen;
  DecodeParams decode;
  bool tune = true;
  std::size_t dev_size = kDefaultDevSize;
  MertConfig mert;
  LogLinearWeights init;
};

struct TrainedSystem {
  std::shared_ptr<const SmtSystem> system;
  std::optional<MertState> tuning;
};

// Align, extract phrases, train the LM on the target side, optionally tune
// with MERT on a seeded sample of the corpus.
TrainedSystem train_system(const ParallelCorpus& corpus, const SmtTrainingConfig& config);

// Trains a corrected -> erroneous translator from seed pairs given as
// (source = corrected, target = erroneous).
std::shared_ptr<const SmtSystem> train_error_generator(
    const ParallelCorpus& seed_pairs, const SmtTrainingConfig& config = {});

// poor = generator(sentence), good = sentence; tagged BACK_TRANSLATION.
PairRecord back_translate(const Sentence& sentence, const SmtSystem& generator,
                          std::size_t source_id = 0);

// Runs `make` over a stream in batches (parallel within a batch, output in
// order), filtering and emitting to `sink`.
DropReport generate_records(
    const SentenceStream& sources,
    const std::function<PairRecord(const Sentence&, std::size_t)>& make,
    const SynthesisOptions& options, const RecordSink& sink);

// ---------------------------------------------------------------- output

// Writes <prefix>.tsv (poor TAB good TAB generator TAB edit_rate),
// <prefix>.m2, <prefix>.poor.txt and <prefix>.good.txt.
class PairWriter {
 public:
  PairWriter(const std::filesystem::path& dir, const std::string& prefix = "pairs");
  void write(const PairRecord& record);
  void close();

  std::vector<std::filesystem::path> paths() const;

 private:
  std::filesystem::path dir_;
  std::string prefix_;
  std::ofstream tsv_, m2_, poor_, good_;
};

std::string format_tsv_line(const PairRecord& record);
// Throws Error(kFormat).
PairRecord parse_tsv_line(const std::string& line, std::size_t source_id);
std::vector<PairRecord> read_pairs_tsv(const std::filesystem::path& path);
// Reads a poor TAB good file (extra columns ignored) as a parallel corpus.
ParallelCorpus read_tsv_corpus(const std::filesystem::path& path);

}  // namespace pairforge

#endif  // PAIRFORGE_SYNTH_HPP_
