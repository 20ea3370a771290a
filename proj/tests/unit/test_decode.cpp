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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "pairforge/decode.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace pairforge;
using testing::ExhaustiveDecoder;
using testing::Gen;
using testing::words;

namespace {

PhraseTable table_of(std::initializer_list<std::pair<const char*, const char*>> rows,
                     std::array<double, 4> features = {0.5, 0.5, 0.5, 0.5}) {
  PhraseTable pt;
  for (const auto& [s, t] : rows) pt.add({words(s), words(t), features});
  return pt;
}

LogLinearWeights monotone_weights() {
  LogLinearWeights w;
  w.lm = 0.5;
  w.phrase = {0.2, 0.2, 0.2, 0.2};
  w.word_penalty = 0.0;
  w.distortion = 1.0;
  return w;
}

struct ToySetup {
  PhraseTable pt{3};
  NGramModel lm;
};

ToySetup random_setup(Gen& g) {
  const std::vector<std::string> src_vocab = testing::letters(5);
  const std::vector<std::string> tgt_vocab = {"u", "v", "w", "x", "y", "z"};
  ToySetup s;
  for (const auto& w : src_vocab) {
    if (g.coin(0.15)) continue;
    std::size_t n = g.between(1, 2);
    for (std::size_t k = 0; k < n; ++k) {
      s.pt.add({{w}, g.sentence(1, 2, tgt_vocab),
                {g.uniform(0.05, 1), g.uniform(0.05, 1), g.uniform(0.05, 1), g.uniform(0.05, 1)}});
    }
  }
  for (std::size_t k = 0; k < 6; ++k) {
    s.pt.add({g.sentence(2, 3, src_vocab), g.sentence(1, 3, tgt_vocab),
              {g.uniform(0.05, 1), g.uniform(0.05, 1), g.uniform(0.05, 1), g.uniform(0.05, 1)}});
  }
  std::vector<Sentence> corpus;
  for (std::size_t k = 0; k < 30; ++k) corpus.push_back(g.sentence(2, 6, tgt_vocab));
  s.lm = train_lm(corpus, static_cast<int>(g.between(1, 3)));
  return s;
}

LogLinearWeights random_weights(Gen& g) {
  LogLinearWeights w;
  w.lm = g.uniform(0, 1);
  for (auto& p : w.phrase) p = g.uniform(-0.2, 1);
  w.word_penalty = g.uniform(-1, 1);
  w.distortion = g.uniform(-0.2, 1);
  return w;
}

}  // namespace

TEST_CASE("weights vector layout and validation") {
  LogLinearWeights w;
  w.phrase = {1, 2, 3, 4};
  w.lm = 5;
  w.word_penalty = 6;
  w.distortion = 7;
  FeatureVector v = w.as_vector();
  for (std::size_t i = 0; i < kNumFeatures; ++i) CHECK(v[i] == static_cast<double>(i + 1));
  CHECK(LogLinearWeights::from_vector(v) == w);
  v[kLm] = -0.1;
  CHECK(testing::error_kind([&] { LogLinearWeights::from_vector(v); }) ==
        ErrorKind::kInvalidArgument);
  v[kLm] = std::nan("");
  CHECK(testing::error_kind([&] { LogLinearWeights::from_vector(v); }) ==
        ErrorKind::kInvalidArgument);
}

TEST_CASE("scale_lm_weight") {
  LogLinearWeights w;
  w.lm = 0.5;
  CHECK(scale_lm_weight(w, 0.8).lm == doctest::Approx(0.4));
  CHECK(scale_lm_weight(w, 0.8).phrase == w.phrase);
  CHECK(scale_lm_weight(w, 1.0) == w);
  CHECK(scale_lm_weight(w, 0.0).lm == 0.0);
  CHECK(testing::error_kind([&] { scale_lm_weight(w, -0.1); }) == ErrorKind::kNegativeFactor);
}

TEST_CASE("weights json") {
  Gen g(3);
  for (int i = 0; i < 50; ++i) {
    LogLinearWeights w = random_weights(g);
    LogLinearWeights back = weights_from_json(weights_to_json(w));
    FeatureVector a = w.as_vector(), b = back.as_vector();
    for (std::size_t k = 0; k < kNumFeatures; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-15));
  }
  CHECK(testing::error_kind([] { weights_from_json(R"({"lm": 1, "bogus": 2})"); }) ==
        ErrorKind::kFormat);
  CHECK(testing::error_kind([] { weights_from_json("not json"); }) == ErrorKind::kFormat);
  CHECK(testing::error_kind([] { weights_from_json(R"({"phrase": [1, 2]})"); }) ==
        ErrorKind::kFormat);

  testing::TempDir dir("weights");
  LogLinearWeights w;
  w.lm = 0.75;
  write_weights(dir / "w.json", w);
  CHECK(read_weights(dir / "w.json") == w);
  CHECK(testing::error_kind([&] { read_weights(dir / "missing.json"); }) == ErrorKind::kIo);
}

TEST_CASE("monotone translation of known words") {
  PhraseTable pt = table_of({{"le", "the"}, {"chat", "cat"}});
  NGramModel lm = train_lm({words("the cat"), words("the cat sat")}, 2);
  Translation t = decode(pt, lm, monotone_weights(), words("le chat"));
  CHECK(detokenize(t.target) == "the cat");
  CHECK(t.features[kWordPenalty] == 2.0);
  CHECK(t.features[kDistortion] == 0.0);
  CHECK(t.features[kPhraseFwd] == doctest::Approx(2 * std::log10(0.5)));
  CHECK(t.features[kLm] == doctest::Approx(logprob(lm, words("the cat"))));
  CHECK(t.score == doctest::Approx(dot(monotone_weights().as_vector(), t.features)));
}

TEST_CASE("unknown words are copied through") {
  PhraseTable pt = table_of({{"le", "the"}});
  NGramModel lm = train_lm({words("the cat")}, 2);
  Translation t = decode(pt, lm, monotone_weights(), words("foo"));
  CHECK(detokenize(t.target) == "foo");
  CHECK(t.features[kPhraseFwd] == kOovPenalty);
  CHECK(t.features[kPhraseRev] == 0.0);
  CHECK(detokenize(decode(pt, lm, monotone_weights(), words("le foo")).target) == "the foo");
}

TEST_CASE("exact ties pick the lexicographically smaller string") {
  PhraseTable pt = table_of({{"a", "y"}, {"a", "x"}});
  NGramModel lm = train_lm({words("p q"), words("q p")}, 2);
  CHECK(detokenize(decode(pt, lm, monotone_weights(), words("a")).target) == "x");
  CHECK(detokenize(decode(pt, lm, monotone_weights(), words("a a")).target) == "x x");
}

TEST_CASE("decode errors") {
  PhraseTable pt = table_of({{"a", "b"}});
  NGramModel lm = train_lm({words("b")}, 2);
  CHECK(testing::error_kind([&] { decode(pt, lm, monotone_weights(), {}); }) ==
        ErrorKind::kEmptySource);
  CHECK(testing::error_kind([&] { decode(pt, lm, monotone_weights(), words("a"), {0, 6}); }) ==
        ErrorKind::kInvalidArgument);
}

TEST_CASE("decoder matches exhaustive search") {
  Gen g(20240601);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "oov"};
  int checked = 0;
  for (int round = 0; round < 40; ++round) {
    ToySetup setup = random_setup(g);
    for (int k = 0; k < 5; ++k) {
      LogLinearWeights w = random_weights(g);
      Sentence src = g.sentence(1, 4, vocab);
      std::size_t limit = g.between(0, 4);
      ExhaustiveDecoder oracle(setup.pt, setup.lm, w, src, limit);
      REQUIRE(oracle.found());
      DecodeParams params{100000, limit};
      Translation t = decode(setup.pt, setup.lm, w, src, params);
      INFO("src=" << detokenize(src) << " limit=" << limit);
      CHECK(t.score == doctest::Approx(oracle.score()).epsilon(1e-9));
      CHECK(detokenize(t.target) == oracle.text());
      for (std::size_t f = 0; f < kNumFeatures; ++f)
        CHECK(t.features[f] == doctest::Approx(oracle.features()[f]).epsilon(1e-9));
      ++checked;
    }
  }
  CHECK(checked == 200);
}

TEST_CASE("nbest with unbounded beam lists every distinct output") {
  Gen g(77);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e"};
  for (int round = 0; round < 40; ++round) {
    ToySetup setup = random_setup(g);
    LogLinearWeights w = random_weights(g);
    Sentence src = g.sentence(1, 3, vocab);
    DecodeParams params{100000, 3};
    ExhaustiveDecoder oracle(setup.pt, setup.lm, w, src, params.distortion_limit);
    NBestList list = nbest(setup.pt, setup.lm, w, src, 1000, params);
    REQUIRE(list.entries.size() == oracle.surfaces().size());
    std::set<std::string> seen;
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
      const Translation& t = list.entries[i];
      std::string text = detokenize(t.target);
      CHECK(seen.insert(text).second);
      REQUIRE(oracle.surfaces().count(text) == 1);
      CHECK(t.score == doctest::Approx(oracle.surfaces().at(text)).epsilon(1e-9));
      CHECK(t.score == doctest::Approx(dot(w.as_vector(), t.features)));
      if (i > 0) CHECK(list.entries[i - 1].score >= t.score - 1e-12);
    }
  }
}

TEST_CASE("nbest basics") {
  PhraseTable pt = table_of({{"a", "x"}, {"a", "y"}});
  NGramModel lm = train_lm({words("x y"), words("y x")}, 2);
  LogLinearWeights w = monotone_weights();
  NBestList list = nbest(pt, lm, w, words("a"), 5);
  REQUIRE(list.entries.size() == 2);
  CHECK(detokenize(list.entries[0].target) == "x");
  NBestList one = nbest(pt, lm, w, words("a"), 1);
  REQUIRE(one.entries.size() == 1);
  CHECK(one.entries[0].target == decode(pt, lm, w, words("a")).target);

  Gen g(5);
  for (int round = 0; round < 20; ++round) {
    ToySetup setup = random_setup(g);
    LogLinearWeights rw = random_weights(g);
    Sentence src = g.sentence(1, 4, testing::letters(5));
    Translation best = decode(setup.pt, setup.lm, rw, src);
    NBestList top = nbest(setup.pt, setup.lm, rw, src, 1);
    REQUIRE(top.entries.size() == 1);
    CHECK(top.entries[0].target == best.target);
  }
}

TEST_CASE("nbest file round trip") {
  Gen g(9);
  std::vector<NBestList> lists;
  for (std::size_t id = 0; id < 5; ++id) {
    ToySetup setup = random_setup(g);
    NBestList l = nbest(setup.pt, setup.lm, random_weights(g), g.sentence(1, 3, testing::letters(5)), 4);
    l.sentence_id = id;
    lists.push_back(l);
  }
  std::stringstream buf;
  for (const auto& l : lists) write_nbest(buf, l);
  std::vector<NBestList> back = read_nbest(buf);
  REQUIRE(back.size() == lists.size());
  for (std::size_t i = 0; i < lists.size(); ++i) {
    CHECK(back[i].sentence_id == lists[i].sentence_id);
    REQUIRE(back[i].entries.size() == lists[i].entries.size());
    for (std::size_t k = 0; k < lists[i].entries.size(); ++k) {
      CHECK(back[i].entries[k].target == lists[i].entries[k].target);
      CHECK(back[i].entries[k].score == doctest::Approx(lists[i].entries[k].score));
      for (std::size_t f = 0; f < kNumFeatures; ++f)
        CHECK(back[i].entries[k].features[f] ==
              doctest::Approx(lists[i].entries[k].features[f]).epsilon(1e-9));
    }
  }
  std::stringstream bad("0 ||| x ||| 1 2 ||| nope\n");
  CHECK(testing::error_kind([&] { read_nbest(bad); }) == ErrorKind::kFormat);
}

TEST_CASE("lowering the lm weight never raises lm score under exact search") {
  Gen g(31);
  for (int round = 0; round < 60; ++round) {
    ToySetup setup = random_setup(g);
    LogLinearWeights w = random_weights(g);
    double factor = g.unit();
    DecodeParams params{100000, 3};
    Sentence src = g.sentence(1, 4, testing::letters(5));
    Translation full = decode(setup.pt, setup.lm, w, src, params);
    Translation scaled = decode(setup.pt, setup.lm, scale_lm_weight(w, factor), src, params);
    CHECK(scaled.features[kLm] <= full.features[kLm] + 1e-9);
  }
}

TEST_CASE("system batch translation is ordered and deterministic") {
  Gen g(11);
  ToySetup setup = random_setup(g);
  auto pt = std::make_shared<PhraseTable>(setup.pt);
  auto lm = std::make_shared<NGramModel>(setup.lm);
  SmtSystem sys(pt, lm, random_weights(g));
  std::vector<Sentence> sources;
  for (int i = 0; i < 40; ++i) sources.push_back(g.sentence(1, 5, testing::letters(5)));
  auto serial = sys.translate_batch(sources, 1);
  auto parallel = sys.translate_batch(sources, 4);
  CHECK(serial == parallel);
  for (std::size_t i = 0; i < sources.size(); ++i)
    CHECK(serial[i] == sys.translate(sources[i]).target);
  CHECK(sys.translate_batch(sources, 3) == serial);

  LogLinearWeights other = random_weights(g);
  SmtSystem swapped = sys.with_weights(other);
  CHECK(swapped.weights() == other);
  CHECK(&swapped.phrases() == &sys.phrases());
}

TEST_CASE("distortion limit falls back to monotone when no reordering fits") {
  PhraseTable pt = table_of({{"a b", "x"}, {"c", "y"}});
  NGramModel lm = train_lm({words("x y")}, 2);
  Translation t = decode(pt, lm, monotone_weights(), words("a b c"), {4, 0});
  CHECK(detokenize(t.target) == "x y");
  CHECK(t.features[kDistortion] == 0.0);
}
