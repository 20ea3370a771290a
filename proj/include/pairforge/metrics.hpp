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

#ifndef PAIRFORGE_METRICS_HPP_
#define PAIRFORGE_METRICS_HPP_

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "pairforge/pair_record.hpp"
#include "pairforge/textcore.hpp"
#include "pairforge/wordlists.hpp"

namespace pairforge {

// ---------------------------------------------------------------- BLEU

inline constexpr std::size_t kBleuOrder = 4;

// Sufficient statistics of BLEU-4; additive over sentences.
struct BleuStats {
  std::array<double, kBleuOrder> matches{};  // clipped
  std::array<double, kBleuOrder> totals{};   // hypothesis n-grams
  double hyp_len = 0.0;
  double ref_len = 0.0;

  BleuStats& operator+=(const BleuStats& o);
  BleuStats& operator-=(const BleuStats& o);
  friend BleuStats operator+(BleuStats a, const BleuStats& b) { return a += b; }
  bool operator==(const BleuStats&) const = default;

  // Modified precision of order n (1-based); 0 when there are no n-grams.
  double precision(std::size_t n) const;
  // Corpus BLEU in [0, 100]; any zero precision gives 0.
  double score() const;
};

BleuStats bleu_stats(const Sentence& ref, const Sentence& hyp);

// Throws Error(kLengthMismatch) or Error(kEmptyInput).
double bleu(const std::vector<Sentence>& refs, const std::vector<Sentence>& hyps);

// ---------------------------------------------------------------- edits

enum class ErrorType {
  kVerbForm,
  kNounNum,
  kDet,
  kPrep,
  kOrth,
  kWordOrder,
  kMissing,
  kUnnecessary,
  kOther,
};

inline constexpr std::array<ErrorType, 9> kAllErrorTypes = {
    ErrorType::kVerbForm, ErrorType::kNounNum,   ErrorType::kDet,
    ErrorType::kPrep,     ErrorType::kOrth,      ErrorType::kWordOrder,
    ErrorType::kMissing,  ErrorType::kUnnecessary, ErrorType::kOther};

std::string_view error_type_name(ErrorType t);
ErrorType parse_error_type(std::string_view name);

// Replaces source tokens [start, end) with `replacement`.
struct Edit {
  std::size_t start = 0;
  std::size_t end = 0;
  Sentence replacement;
  ErrorType type = ErrorType::kOther;

  // Span and correction equality; the type is not compared.
  bool same_correction(const Edit& o) const {
    return start == o.start && end == o.end && replacement == o.replacement;
  }
};

struct EditScript {
  Sentence source;
  std::vector<Edit> edits;  // ordered, non-overlapping

  // Applies the edits left to right.
  Sentence apply() const;
};

// Levenshtein alignment (ties: match, substitution, deletion, insertion),
// adjacent non-match operations merged into one edit, each edit typed with
// classify_edit.
EditScript extract_edits(const Sentence& source, const Sentence& target,
                         const WordLists& lists = WordLists::defaults());

// First matching rule: MISSING, UNNECESSARY, ORTH, VERB_FORM, NOUN_NUM, DET,
// PREP, WORD_ORDER, otherwise OTHER.
ErrorType classify_edit(const Edit& edit, const Sentence& source,
                        const WordLists& lists = WordLists::defaults());

struct FScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  std::size_t true_positives = 0;
  std::size_t proposed = 0;
  std::size_t gold = 0;
};

// Edits match on span and correction. 0/0 precision or recall is 1, 0/0 F is
// 0. Throws Error(kLengthMismatch) or Error(kInvalidArgument) for beta <= 0.
FScore f_beta(std::span<const EditScript> system, std::span<const EditScript> gold,
              double beta = 0.5);

// ---------------------------------------------------------------- profile

struct ErrorProfile {
  double error_rate = 0.0;    // percent of poor-side tokens inside edits
  double pct_in_rules = 0.0;  // percent of edits not typed OTHER
  std::size_t pairs = 0;
  std::size_t poor_tokens = 0;
  std::size_t edited_tokens = 0;
  std::size_t edits = 0;
  std::map<ErrorType, std::size_t> per_type;
};

// Edits are extracted poor -> good. 0/0 pct_in_rules is 100. Throws
// Error(kEmptyInput).
ErrorProfile error_stats(std::span<const PairRecord> pairs,
                         const WordLists& lists = WordLists::defaults());

// Incremental form of error_stats for streamed input.
class ErrorProfileBuilder {
 public:
  explicit ErrorProfileBuilder(const WordLists& lists = WordLists::defaults())
      : lists_(lists) {}
  void add(const PairRecord& record);
  ErrorProfile finish() const;

 private:
  const WordLists& lists_;
  ErrorProfile profile_;
};

// ---------------------------------------------------------------- M2

// S <tokens>
// A start end|||TYPE|||correction|||REQUIRED|||-NONE-|||0
// <blank line>
void write_m2(std::ostream& out, const EditScript& script);
std::vector<EditScript> read_m2(std::istream& in);

}  // namespace pairforge

#endif  // PAIRFORGE_METRICS_HPP_
