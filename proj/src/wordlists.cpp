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

#include "pairforge/wordlists.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "pairforge/error.hpp"
#include "pairforge/wordlists_data.hpp"

namespace pairforge {

namespace {

std::vector<std::vector<std::string>> parse_lines(std::string_view text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> words;
    for (std::string w; fields >> w;) words.push_back(to_lower(w));
    if (!words.empty()) out.push_back(std::move(words));
  }
  return out;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// Third person, past and progressive forms of a regular verb.
std::vector<std::string> regular_forms(const std::string& lemma) {
  const char last = lemma.back();
  const bool consonant_y =
      last == 'y' && lemma.size() > 1 && !is_vowel(lemma[lemma.size() - 2]);
  const std::string stem_y = lemma.substr(0, lemma.size() - 1);
  std::string third;
  if (consonant_y) third = stem_y + "ies";
  else if (last == 's' || last == 'x' || last == 'z' || ends_with(lemma, "ch") ||
           ends_with(lemma, "sh"))
    third = lemma + "es";
  else third = lemma + "s";
  std::string past = consonant_y ? stem_y + "ied" : last == 'e' ? lemma + "d" : lemma + "ed";
  std::string progressive =
      last == 'e' && !ends_with(lemma, "ee") ? stem_y + "ing" : lemma + "ing";
  return {third, past, progressive};
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const WordLists& WordLists::defaults() {
  static const WordLists lists =
      parse(embedded::kDeterminers, embedded::kPrepositions, embedded::kVerbs);
  return lists;
}

WordLists WordLists::load(const std::filesystem::path& dir) {
  return parse(slurp(dir / "determiners.txt"), slurp(dir / "prepositions.txt"),
               slurp(dir / "verbs.txt"));
}

WordLists WordLists::parse(std::string_view determiners,
                           std::string_view prepositions, std::string_view verbs) {
  WordLists lists;
  for (auto& line : parse_lines(determiners))
    lists.determiners_.insert(line.begin(), line.end());
  for (auto& line : parse_lines(prepositions))
    lists.prepositions_.insert(line.begin(), line.end());
  for (auto& line : parse_lines(verbs)) {
    const std::string& lemma = line.front();
    lists.verb_lemmas_.insert(lemma);
    for (std::size_t i = 1; i < line.size(); ++i) lists.irregular_.emplace(line[i], lemma);
    std::vector<std::string> forms = line;
    if (line.size() == 1) {
      auto regular = regular_forms(lemma);
      forms.insert(forms.end(), regular.begin(), regular.end());
    }
    lists.forms_[lemma] = std::move(forms);
  }
  return lists;
}

bool WordLists::is_determiner(std::string_view w) const {
  return determiners_.count(to_lower(w)) != 0;
}

bool WordLists::is_preposition(std::string_view w) const {
  return prepositions_.count(to_lower(w)) != 0;
}

bool WordLists::is_verb_lemma(std::string_view lemma) const {
  return verb_lemmas_.count(lemma) != 0;
}

std::set<std::string> WordLists::lemma_candidates(std::string_view word) const {
  std::string w = to_lower(word);
  std::set<std::string> out{w};
  if (auto it = irregular_.find(w); it != irregular_.end()) out.insert(it->second);
  auto add_stem = [&](std::string stem) {
    if (stem.empty()) return;
    out.insert(stem);
    out.insert(stem + "e");
    // running -> run, stopped -> stop
    if (stem.size() >= 2 && stem.back() == stem[stem.size() - 2] && !is_vowel(stem.back()))
      out.insert(stem.substr(0, stem.size() - 1));
  };
  if (ends_with(w, "ing")) add_stem(w.substr(0, w.size() - 3));
  if (ends_with(w, "ied")) out.insert(w.substr(0, w.size() - 3) + "y");
  if (ends_with(w, "ed")) add_stem(w.substr(0, w.size() - 2));
  if (ends_with(w, "ies")) out.insert(w.substr(0, w.size() - 3) + "y");
  if (ends_with(w, "es")) out.insert(w.substr(0, w.size() - 2));
  if (ends_with(w, "s")) out.insert(w.substr(0, w.size() - 1));
  return out;
}

bool WordLists::same_verb(std::string_view a, std::string_view b) const {
  std::string la = to_lower(a), lb = to_lower(b);
  if (la == lb) return false;
  auto ca = lemma_candidates(la);
  for (const auto& lemma : lemma_candidates(lb)) {
    if (ca.count(lemma) && is_verb_lemma(lemma)) return true;
  }
  return false;
}

std::vector<std::string> WordLists::verb_forms(std::string_view word) const {
  for (const auto& lemma : lemma_candidates(word)) {
    if (!is_verb_lemma(lemma)) continue;
    auto it = forms_.find(lemma);
    if (it != forms_.end()) return it->second;
  }
  return {};
}

}  // namespace pairforge
