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

#ifndef PAIRFORGE_ALIGN_HPP_
#define PAIRFORGE_ALIGN_HPP_

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pairforge/textcore.hpp"

namespace pairforge {

// Empty source word that absorbs unaligned target words.
inline constexpr std::string_view kNullToken = "NULL";

// Lexical translation probabilities t(target | source). Each source row sums
// to one.
class TranslationTable {
 public:
  double operator()(std::string_view source, std::string_view target) const;
  void set(const std::string& source, const std::string& target, double p);

  const std::unordered_map<std::string, std::unordered_map<std::string, double>>&
  rows() const {
    return rows_;
  }

  // "source target prob" lines sorted by source then target.
  void write(std::ostream& out) const;
  void write(const std::filesystem::path& path) const;
  static TranslationTable read(std::istream& in);
  static TranslationTable read(const std::filesystem::path& path);

 private:
  std::unordered_map<std::string, std::unordered_map<std::string, double>> rows_;
};

// Pairs with source and target swapped.
ParallelCorpus swapped(const ParallelCorpus& corpus);

// IBM Model 1 EM over t(target | source) with a NULL source word. When
// log_likelihood is given it receives iterations + 1 values: the corpus
// log-likelihood (natural log) of the initial table and after each iteration.
TranslationTable em_model1(const ParallelCorpus& corpus, int iterations,
                           std::vector<double>* log_likelihood = nullptr);

double model1_log_likelihood(const TranslationTable& table,
                             const ParallelCorpus& corpus);

using AlignmentLink = std::pair<std::size_t, std::size_t>;  // (source, target)

struct AlignmentMatrix {
  std::size_t source_len = 0;
  std::size_t target_len = 0;
  std::set<AlignmentLink> links;

  AlignmentMatrix() = default;
  // Throws Error(kDimensionMismatch) for a link out of range.
  AlignmentMatrix(std::size_t source_len, std::size_t target_len,
                  std::set<AlignmentLink> links);

  AlignmentMatrix transposed() const;
  bool contains(std::size_t s, std::size_t t) const {
    return links.count({s, t}) != 0;
  }
  bool operator==(const AlignmentMatrix&) const = default;
};

// Each target word links to its most probable source word, or to nothing when
// NULL is strictly more probable or every source word is unknown. Ties go to
// the lowest source index.
AlignmentMatrix viterbi_align(const TranslationTable& table,
                              const SentencePair& pair);

// grow-diag without the final step. Both inputs are oriented source x target.
// Throws Error(kDimensionMismatch).
AlignmentMatrix symmetrize(const AlignmentMatrix& forward,
                           const AlignmentMatrix& reverse);

struct ExtractedPhrase {
  Sentence source;
  Sentence target;
  double count = 1.0;
  // Links inside the block, relative to the phrase starts.
  std::vector<AlignmentLink> links;
};

// Phrase pairs of at most max_len tokens per side consistent with the
// alignment, including extensions over unaligned target words.
std::vector<ExtractedPhrase> extract_phrases(const SentencePair& pair,
                                             const AlignmentMatrix& alignment,
                                             std::size_t max_len);

inline constexpr std::size_t kDefaultMaxPhraseLen = 7;

struct PhraseTableEntry {
  Sentence source;
  Sentence target;
  // phi(t|s), phi(s|t), lex(t|s), lex(s|t); each in (0, 1].
  std::array<double, 4> features{};
};

class PhraseTable {
 public:
  PhraseTable() = default;
  explicit PhraseTable(std::size_t max_phrase_len)
      : max_phrase_len_(max_phrase_len) {}

  void add(PhraseTableEntry entry);

  // Entries for a source phrase, sorted by target; empty when unknown.
  const std::vector<PhraseTableEntry>& lookup(const Sentence& source) const;
  bool contains(const Sentence& source) const;

  std::size_t max_phrase_len() const { return max_phrase_len_; }
  std::size_t size() const { return size_; }
  const std::map<std::string, std::vector<PhraseTableEntry>>& entries() const {
    return entries_;
  }

  // src ||| tgt ||| phi(t|s) phi(s|t) lex(t|s) lex(s|t)
  void write(std::ostream& out) const;
  void write(const std::filesystem::path& path) const;
  static PhraseTable read(std::istream& in);
  static PhraseTable read(const std::filesystem::path& path);

 private:
  std::map<std::string, std::vector<PhraseTableEntry>> entries_;
  std::size_t max_phrase_len_ = kDefaultMaxPhraseLen;
  std::size_t size_ = 0;
};

// Relative-frequency phrase probabilities in both directions; lexical weights
// averaged over the occurrences of each phrase pair. lex_fwd holds
// t(target|source), lex_rev holds t(source|target). Throws
// Error(kLengthMismatch) unless there is one alignment per pair.
PhraseTable build_phrase_table(const ParallelCorpus& corpus,
                               const std::vector<AlignmentMatrix>& alignments,
                               std::size_t max_len,
                               const TranslationTable& lex_fwd,
                               const TranslationTable& lex_rev);

// Moses "i-j" alignment lines, one sentence per line.
void write_alignments(const std::filesystem::path& path,
                      const std::vector<AlignmentMatrix>& alignments);
std::vector<AlignmentMatrix> read_alignments(const std::filesystem::path& path,
                                             const ParallelCorpus& corpus);

// Forward and reverse Model 1, Viterbi both ways, grow-diag.
struct WordAlignment {
  TranslationTable forward;   // t(target | source)
  TranslationTable reverse;   // t(source | target)
  std::vector<AlignmentMatrix> alignments;
};
WordAlignment align_corpus(const ParallelCorpus& corpus, int iterations);

}  // namespace pairforge

#endif  // PAIRFORGE_ALIGN_HPP_
