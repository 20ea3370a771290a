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

#ifndef PAIRFORGE_DECODE_HPP_
#define PAIRFORGE_DECODE_HPP_

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pairforge/align.hpp"
#include "pairforge/lm.hpp"
#include "pairforge/parallel.hpp"
#include "pairforge/textcore.hpp"

namespace pairforge {

// Feature order everywhere: phi(t|s) phi(s|t) lex(t|s) lex(s|t) lm wp dist.
inline constexpr std::size_t kNumFeatures = 7;
using FeatureVector = std::array<double, kNumFeatures>;

enum FeatureIndex : std::size_t {
  kPhraseFwd = 0,
  kPhraseRev = 1,
  kLexFwd = 2,
  kLexRev = 3,
  kLm = 4,
  kWordPenalty = 5,
  kDistortion = 6,
};

double dot(const FeatureVector& a, const FeatureVector& b);

struct LogLinearWeights {
  double lm = 0.5;
  std::array<double, 4> phrase{0.2, 0.2, 0.2, 0.2};
  double word_penalty = 0.0;
  double distortion = 0.3;

  FeatureVector as_vector() const;
  // Throws Error(kInvalidArgument) for non-finite values or a negative lm.
  static LogLinearWeights from_vector(const FeatureVector& v);
  void validate() const;

  bool operator==(const LogLinearWeights&) const = default;
};

// Returns a copy with lm multiplied by factor. Throws Error(kNegativeFactor).
LogLinearWeights scale_lm_weight(const LogLinearWeights& w, double factor);

// {"lm": x, "phrase": [4 floats], "word_penalty": x, "distortion": x}
void write_weights(const std::filesystem::path& path, const LogLinearWeights& w);
LogLinearWeights read_weights(const std::filesystem::path& path);
std::string weights_to_json(const LogLinearWeights& w);
LogLinearWeights weights_from_json(const std::string& text);

struct DecodeParams {
  std::size_t beam_size = 4;
  std::size_t distortion_limit = 6;
};

// log10 of the phi(t|s) value used for source words copied through verbatim.
inline constexpr double kOovPenalty = -4.0;

struct Translation {
  Sentence target;
  FeatureVector features{};
  double score = 0.0;
};

struct NBestList {
  std::size_t sentence_id = 0;
  std::vector<Translation> entries;  // descending score, distinct targets
};

// Best translation under the log-linear model. Throws Error(kEmptySource).
Translation decode(const PhraseTable& pt, const NGramModel& lm,
                   const LogLinearWeights& w, const Sentence& src,
                   const DecodeParams& params = {});

// Up to n distinct-surface translations read off the search graph of decode();
// the first entry equals decode(). Throws Error(kEmptySource).
NBestList nbest(const PhraseTable& pt, const NGramModel& lm,
                const LogLinearWeights& w, const Sentence& src, std::size_t n,
                const DecodeParams& params = {});

//   id ||| target tokens ||| f1 f2 f3 f4 lm wp dist ||| total
void write_nbest(std::ostream& out, const NBestList& list);
std::vector<NBestList> read_nbest(std::istream& in);

// A phrase table, language model and weights bundled for repeated use.
class SmtSystem {
 public:
  SmtSystem(std::shared_ptr<const PhraseTable> phrases,
            std::shared_ptr<const NGramModel> lm, LogLinearWeights weights,
            DecodeParams params = {});

  Translation translate(const Sentence& src) const;
  NBestList translate_nbest(const Sentence& src, std::size_t n) const;
  // Output order matches input order regardless of threads.
  std::vector<Sentence> translate_batch(std::span<const Sentence> sources,
                                        std::size_t threads = 1) const;

  SmtSystem with_weights(const LogLinearWeights& w) const;

  const PhraseTable& phrases() const { return *phrases_; }
  const NGramModel& lm() const { return *lm_; }
  const LogLinearWeights& weights() const { return weights_; }
  const DecodeParams& params() const { return params_; }

 private:
  std::shared_ptr<const PhraseTable> phrases_;
  std::shared_ptr<const NGramModel> lm_;
  LogLinearWeights weights_;
  DecodeParams params_;
};

}  // namespace pairforge

#endif  // PAIRFORGE_DECODE_HPP_
