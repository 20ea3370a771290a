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

#ifndef PAIRFORGE_TEXTCORE_HPP_
#define PAIRFORGE_TEXTCORE_HPP_

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pairforge {

// A token is a non-empty string without whitespace; casing is preserved.
using Token = std::string;
using Sentence = std::vector<Token>;

struct SentencePair {
  Sentence source;
  Sentence target;
};

struct ParallelCorpus {
  std::string name;
  std::vector<SentencePair> pairs;
  // Line pairs skipped because one or both sides were blank.
  std::size_t dropped = 0;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

// Whitespace split, then punctuation from the set .,;:!?"'() becomes separate
// one-character tokens. An apostrophe or period with alphanumerics on both
// sides stays inside its word ("don't", "3.5").
Sentence tokenize(std::string_view text);

// Canonical single-space join.
std::string detokenize(const Sentence& sentence);

// Canonical composition (NFC). Invalid UTF-8 is returned unchanged.
std::string normalize_nfc(std::string_view text);

// Line i of each file becomes pair i. Lines are NFC-normalized and tokenized;
// pairs with a blank side are dropped and counted in ParallelCorpus::dropped.
// Throws Error(kLineCountMismatch) or Error(kIo).
ParallelCorpus load_parallel(const std::filesystem::path& source_path,
                             const std::filesystem::path& target_path);

// Every line of a file, NFC-normalized and tokenized (blank lines kept as
// empty sentences so that line numbers stay meaningful).
std::vector<Sentence> load_sentences(const std::filesystem::path& path);

std::size_t count_lines(const std::filesystem::path& path);

void write_sentences(const std::filesystem::path& path,
                     const std::vector<Sentence>& sentences);

// Streaming reader: one normalized, tokenized sentence per call.
class SentenceReader {
 public:
  explicit SentenceReader(const std::filesystem::path& path);

  std::optional<Sentence> next();
  std::size_t line_number() const { return line_; }

 private:
  std::ifstream in_;
  std::size_t line_ = 0;
};

// Token-level Levenshtein distance with unit costs.
std::size_t edit_distance(const Sentence& a, const Sentence& b);

// edit_distance(poor, good) / |poor|. Throws Error(kEmptySource) when poor is
// empty.
double edit_rate(const Sentence& poor, const Sentence& good);

std::vector<std::string> split_tabs(std::string_view line);

// Whole-field numeric parsing. Throws Error(kFormat) mentioning `what`.
double parse_real(std::string_view text, std::string_view what);
std::size_t parse_count(std::string_view text, std::string_view what);

}  // namespace pairforge

#endif  // PAIRFORGE_TEXTCORE_HPP_
