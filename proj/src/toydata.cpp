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

#include "pairforge/toydata.hpp"

#include <array>
#include <random>
#include <string_view>


namespace pairforge {

namespace {

enum class NounClass { kAnimal, kObject };

struct Noun {
  std::string_view src;
  std::string_view sing;
  std::string_view plural;
  NounClass cls;
};

struct Adjective {
  std::string_view src;
  std::string_view animal;
  std::string_view object;
};

struct Verb {
  std::string_view src;
  std::string_view sing;
  std::string_view plural;
};

struct Word {
  std::string_view src;
  std::string_view tgt;
};

constexpr std::array kNouns = {
    Noun{"kato", "cat", "cats", NounClass::kAnimal},
    Noun{"hundo", "dog", "dogs", NounClass::kAnimal},
    Noun{"birdo", "bird", "birds", NounClass::kAnimal},
    Noun{"cevalo", "horse", "horses", NounClass::kAnimal},
    Noun{"elefanto", "elephant", "elephants", NounClass::kAnimal},
    Noun{"muso", "mouse", "mice", NounClass::kAnimal},
    Noun{"fisxo", "fish", "fish", NounClass::kAnimal},
    Noun{"bovo", "cow", "cows", NounClass::kAnimal},
    Noun{"lupo", "wolf", "wolves", NounClass::kAnimal},
    Noun{"anaso", "duck", "ducks", NounClass::kAnimal},
    Noun{"azeno", "donkey", "donkeys", NounClass::kAnimal},
    Noun{"insekto", "insect", "insects", NounClass::kAnimal},
    Noun{"auxto", "car", "cars", NounClass::kObject},
    Noun{"domo", "house", "houses", NounClass::kObject},
    Noun{"tablo", "table", "tables", NounClass::kObject},
    Noun{"libro", "book", "books", NounClass::kObject},
    Noun{"pomo", "apple", "apples", NounClass::kObject},
    Noun{"arbo", "tree", "trees", NounClass::kObject},
    Noun{"urbo", "city", "cities", NounClass::kObject},
    Noun{"sxipo", "ship", "ships", NounClass::kObject},
    Noun{"ponto", "bridge", "bridges", NounClass::kObject},
    Noun{"sxtono", "stone", "stones", NounClass::kObject},
    Noun{"ovo", "egg", "eggs", NounClass::kObject},
    Noun{"horlogxo", "clock", "clocks", NounClass::kObject},
};

constexpr std::array kAdjectives = {
    Adjective{"granda", "big", "large"},
    Adjective{"malgranda", "little", "small"},
    Adjective{"bela", "pretty", "beautiful"},
    Adjective{"ruga", "red", "red"},
    Adjective{"olda", "old", "old"},
    Adjective{"nova", "young", "new"},
    Adjective{"forta", "strong", "sturdy"},
    Adjective{"rapida", "quick", "fast"},
    Adjective{"malsana", "sick", "broken"},
    Adjective{"blanka", "white", "white"},
    Adjective{"malpura", "dirty", "dirty"},
    Adjective{"orienta", "eastern", "eastern"},
};

constexpr std::array kIntransitive = {
    Verb{"dormas", "sleeps", "sleep"}, Verb{"kuras", "runs", "run"},
    Verb{"sidas", "sits", "sit"},      Verb{"staras", "stands", "stand"},
    Verb{"falas", "falls", "fall"},    Verb{"iras", "goes", "go"},
    Verb{"atendas", "waits", "wait"},  Verb{"ludas", "plays", "play"},
    Verb{"ripozas", "rests", "rest"},  Verb{"restas", "stays", "stay"},
};

constexpr std::array kTransitive = {
    Verb{"vidas", "sees", "see"},    Verb{"havas", "has", "have"},
    Verb{"sxatas", "likes", "like"}, Verb{"portas", "carries", "carry"},
    Verb{"trovas", "finds", "find"}, Verb{"tusxas", "touches", "touch"},
    Verb{"sercxas", "seeks", "seek"}, Verb{"atingas", "reaches", "reach"},
};

constexpr std::array kPrepositions = {
    Word{"sur", "on"},   Word{"sub", "under"},  Word{"apud", "near"},
    Word{"en", "in"},    Word{"malantaux", "behind"}, Word{"kun", "with"},
};

bool starts_with_vowel(std::string_view w) {
  return !w.empty() && std::string_view("aeiou").find(w.front()) != std::string_view::npos;
}

class GrammarSampler {
 public:
  explicit GrammarSampler(const ToyGrammarOptions& options)
      : options_(options), rng_(options.seed) {}

  // Source order is subject object [pp] verb; English is subject verb object [pp].
  SentencePair sentence() {
    SentencePair subject, object, pp, out;
    const bool plural = noun_phrase(subject);
    const int shape = static_cast<int>(pick(4));
    const Verb& v = shape < 2 ? kIntransitive[pick(kIntransitive.size())]
                              : kTransitive[pick(kTransitive.size())];
    if (shape >= 2) noun_phrase(object);
    if (shape % 2 == 1) {
      const Word& p = kPrepositions[pick(kPrepositions.size())];
      pp.source.emplace_back(p.src);
      pp.target.emplace_back(p.tgt);
      noun_phrase(pp);
    }
    auto append = [](Sentence& to, const Sentence& from) {
      to.insert(to.end(), from.begin(), from.end());
    };
    append(out.source, subject.source);
    append(out.source, object.source);
    append(out.source, pp.source);
    out.source.emplace_back(v.src);
    append(out.target, subject.target);
    out.target.emplace_back(plural ? v.plural : v.sing);
    append(out.target, object.target);
    append(out.target, pp.target);
    out.source.emplace_back(".");
    out.target.emplace_back(".");
    return out;
  }

 private:
  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  bool chance(double p) { return static_cast<double>(rng_() >> 11) * 0x1.0p-53 < p; }

  // Appends a noun phrase to both sides and returns whether it is plural.
  bool noun_phrase(SentencePair& out) {
    const Noun& n = kNouns[pick(kNouns.size())];
    const bool plural = chance(options_.plural_rate);
    const bool definite = chance(0.6);
    const Adjective* adj =
        chance(options_.adjective_rate) ? &kAdjectives[pick(kAdjectives.size())] : nullptr;
    std::string_view adj_tgt;
    if (adj) adj_tgt = n.cls == NounClass::kAnimal ? adj->animal : adj->object;
    const std::string_view noun_tgt = plural ? n.plural : n.sing;

    if (definite) {
      out.source.emplace_back("la");
      out.target.emplace_back("the");
    } else if (plural) {
      out.source.emplace_back("kelkaj");
      out.target.emplace_back("some");
    } else {
      out.source.emplace_back("unu");
      const std::string_view next = adj ? adj_tgt : noun_tgt;
      out.target.emplace_back(starts_with_vowel(next) ? "an" : "a");
    }
    out.source.push_back(std::string(n.src) + (plural ? "j" : ""));
    if (adj) {
      out.source.push_back(std::string(adj->src) + (plural ? "j" : ""));
      out.target.emplace_back(adj_tgt);
    }
    out.target.emplace_back(noun_tgt);
    return plural;
  }

  ToyGrammarOptions options_;
  std::mt19937_64 rng_;
};

}  // namespace

ParallelCorpus toy_parallel(const ToyGrammarOptions& options) {
  GrammarSampler gen(options);
  ParallelCorpus corpus;
  corpus.name = "toy";
  corpus.pairs.reserve(options.pairs);
  for (std::size_t i = 0; i < options.pairs; ++i) corpus.pairs.push_back(gen.sentence());
  return corpus;
}

ToyDataset toy_dataset(std::size_t train, std::size_t dev, std::size_t test,
                       std::size_t monolingual, std::uint64_t seed) {
  ToyGrammarOptions options;
  options.seed = seed;
  options.pairs = train + dev + test + 2 * monolingual;
  auto all = toy_parallel(options);
  ToyDataset data;
  auto take = [&](std::size_t& at, std::size_t n, ParallelCorpus& into) {
    into.pairs.assign(all.pairs.begin() + at, all.pairs.begin() + at + n);
    at += n;
  };
  std::size_t at = 0;
  take(at, train, data.train);
  take(at, dev, data.dev);
  take(at, test, data.test);
  for (std::size_t i = 0; i < monolingual; ++i) data.monolingual.push_back(all.pairs[at++].source);
  for (std::size_t i = 0; i < monolingual; ++i) data.english.push_back(all.pairs[at++].target);
  data.train.name = "train";
  data.dev.name = "dev";
  data.test.name = "test";
  return data;
}

void write_toy_dataset(const std::filesystem::path& dir, const ToyDataset& data) {
  std::filesystem::create_directories(dir);
  auto sides = [&](const ParallelCorpus& c, const std::string& stem) {
    std::vector<Sentence> src, tgt;
    for (const auto& p : c.pairs) {
      src.push_back(p.source);
      tgt.push_back(p.target);
    }
    write_sentences(dir / (stem + ".src"), src);
    write_sentences(dir / (stem + ".tgt"), tgt);
  };
  sides(data.train, "train");
  sides(data.dev, "dev");
  sides(data.test, "test");
  write_sentences(dir / "mono.src", data.monolingual);
  write_sentences(dir / "english.txt", data.english);
}

}  // namespace pairforge
