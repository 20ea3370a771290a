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

#ifndef PAIRFORGE_LM_HPP_
#define PAIRFORGE_LM_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pairforge/textcore.hpp"

namespace pairforge {

using WordId = std::uint32_t;

inline constexpr int kMaxLmOrder = 5;
inline constexpr double kKneserNeyDiscount = 0.75;

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

// Up to kMaxLmOrder word ids, oldest first.
struct NGramKey {
  std::array<WordId, kMaxLmOrder> ids{};
  std::uint8_t size = 0;

  bool operator==(const NGramKey& other) const {
    if (size != other.size) return false;
    for (std::uint8_t i = 0; i < size; ++i)
      if (ids[i] != other.ids[i]) return false;
    return true;
  }
};

struct NGramKeyHash {
  std::size_t operator()(const NGramKey& key) const {
    std::uint64_t h = 1469598103934665603ull ^ key.size;
    for (std::uint8_t i = 0; i < key.size; ++i) {
      h ^= key.ids[i];
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

// Backoff n-gram model in ARPA form: log10 probabilities and log10 backoff
// weights. Immutable after construction.
class NGramModel {
 public:
  struct Entry {
    double logprob = 0.0;
    double backoff = 0.0;
  };

  NGramModel() = default;

  int order() const { return order_; }
  std::size_t vocab_size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  WordId bos() const { return bos_; }
  WordId eos() const { return eos_; }
  WordId unk() const { return unk_; }

  // Out-of-vocabulary tokens map to <unk>.
  WordId id(std::string_view token) const;
  const std::string& word(WordId id) const { return words_[id]; }

  // log10 P(word | context); context is oldest-first and may be longer than
  // order-1 (only the most recent order-1 ids are used).
  double score(std::span<const WordId> context, WordId word) const;

  // Words that may be predicted: the vocabulary minus <s>.
  std::vector<WordId> predictable() const;

  const Entry* find(const NGramKey& key) const;
  std::size_t ngram_count(int n) const { return tables_[n - 1].size(); }

  void write_arpa(std::ostream& out) const;
  void write_arpa(const std::filesystem::path& path) const;
  static NGramModel read_arpa(std::istream& in);
  static NGramModel read_arpa(const std::filesystem::path& path);

 private:
  friend NGramModel train_lm(const std::vector<Sentence>& corpus, int order);

  WordId add_word(const std::string& w);
  void finalize_specials();

  int order_ = 0;
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> index_;
  std::vector<std::unordered_map<NGramKey, Entry, NGramKeyHash>> tables_;
  WordId bos_ = 0, eos_ = 0, unk_ = 0;
};

// Interpolated Kneser-Ney with a fixed discount at every order. Tokens seen
// once are replaced by <unk>. Throws Error(kEmptyCorpus) or
// Error(kInvalidArgument) for an order outside 1..5.
NGramModel train_lm(const std::vector<Sentence>& corpus, int order = 3);

// Sum of log10 P(w_i | history) over the tokens plus the closing </s>, with a
// single <s> opening the history.
double logprob(const NGramModel& model, const Sentence& sentence);

// 10^(-sum logprob / N) where N counts tokens plus one </s> per sentence.
double perplexity(const NGramModel& model, const std::vector<Sentence>& corpus);

}  // namespace pairforge

#endif  // PAIRFORGE_LM_HPP_
