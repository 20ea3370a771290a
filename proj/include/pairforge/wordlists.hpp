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

#ifndef PAIRFORGE_WORDLISTS_HPP_
#define PAIRFORGE_WORDLISTS_HPP_

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pairforge {

// Closed word lists behind the error-type rules. The defaults are compiled in
// from data/determiners.txt, data/prepositions.txt and data/verbs.txt.
class WordLists {
 public:
  static const WordLists& defaults();
  // Reads the three files from a directory.
  static WordLists load(const std::filesystem::path& dir);
  static WordLists parse(std::string_view determiners,
                         std::string_view prepositions, std::string_view verbs);

  bool is_determiner(std::string_view w) const;
  bool is_preposition(std::string_view w) const;

  // Candidate lemmas of a (lowercased) word by suffix stripping and the
  // irregular-form table; the word itself is always a candidate.
  std::set<std::string> lemma_candidates(std::string_view word) const;
  bool is_verb_lemma(std::string_view lemma) const;
  // True when a and b are different forms sharing a verb lemma.
  bool same_verb(std::string_view a, std::string_view b) const;
  // Known forms of the verb that `word` belongs to (empty if not a verb).
  std::vector<std::string> verb_forms(std::string_view word) const;

 private:
  std::set<std::string, std::less<>> determiners_;
  std::set<std::string, std::less<>> prepositions_;
  std::set<std::string, std::less<>> verb_lemmas_;
  std::unordered_map<std::string, std::string> irregular_;  // form -> lemma
  std::unordered_map<std::string, std::vector<std::string>> forms_;
};

std::string to_lower(std::string_view s);

}  // namespace pairforge

#endif  // PAIRFORGE_WORDLISTS_HPP_
