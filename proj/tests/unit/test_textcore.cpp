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

#include "pairforge/error.hpp"
#include "pairforge/textcore.hpp"
#include "support.hpp"

using namespace pairforge;
using testing::Gen;
using testing::TempDir;

TEST_CASE("tokenize splits whitespace and edge punctuation") {
  CHECK(tokenize("").empty());
  CHECK(tokenize("   \t ").empty());
  CHECK(tokenize("We should stay healthy.") == Sentence{"We", "should", "stay", "healthy", "."});
  CHECK(tokenize("a,b") == Sentence{"a", ",", "b"});
  CHECK(tokenize("(\"Hi!\")") == Sentence{"(", "\"", "Hi", "!", "\"", ")"});
  CHECK(tokenize("Don't stop") == Sentence{"Don't", "stop"});
  CHECK(tokenize("e.g. 3.5") == Sentence{"e.g", ".", "3.5"});
  CHECK(tokenize("Keep CASE") == Sentence{"Keep", "CASE"});
}

TEST_CASE("detokenize joins with single spaces") {
  CHECK(detokenize({}) == "");
  CHECK(detokenize({"a", ",", "b"}) == "a , b");
}

TEST_CASE("tokenize is a fixed point after detokenize") {
  Gen gen(11);
  const std::vector<std::string> pieces = {"cat", "Dog", "don't", "3.5", ".", ",", ";", ":",
                                           "!", "?", "\"", "'", "(", ")", "x.y", "\xC3\xA9t\xC3\xA9"};
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text;
    const std::size_t n = gen.between(0, 12);
    for (std::size_t i = 0; i < n; ++i) {
      text += gen.pick(pieces);
      if (gen.coin(0.6)) text += gen.coin() ? " " : "  ";
    }
    const Sentence once = tokenize(text);
    CHECK(tokenize(detokenize(once)) == once);
    CHECK(tokenize(text) == once);
    for (const auto& tok : once) {
      CHECK_FALSE(tok.empty());
      CHECK(std::none_of(tok.begin(), tok.end(), [](char c) { return c == ' ' || c == '\t'; }));
    }
  }
}

TEST_CASE("NFC normalization composes combining marks") {
  CHECK(normalize_nfc("e\xCC\x81") == "\xC3\xA9");
  CHECK(normalize_nfc("plain ascii") == "plain ascii");
}

TEST_CASE("load_parallel maps lines and drops blank pairs") {
  TempDir dir("textcore");
  SUBCASE("three lines") {
    auto corpus = load_parallel(dir.write("s", "a\nb b\nc\n"), dir.write("t", "x\ny\nz z\n"));
    REQUIRE(corpus.size() == 3);
    CHECK(corpus.pairs[1].source == Sentence{"b", "b"});
    CHECK(corpus.pairs[2].target == Sentence{"z", "z"});
    CHECK(corpus.dropped == 0);
  }
  SUBCASE("line count mismatch") {
    auto s = dir.write("s", "a\nb\nc\n");
    auto t = dir.write("t", "x\ny\nz\nw\n");
    try {
      load_parallel(s, t);
      FAIL("expected LineCountMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kLineCountMismatch);
    }
  }
  SUBCASE("blank on both sides") {
    auto corpus = load_parallel(dir.write("s", "a\n\nc\n"), dir.write("t", "x\n\nz\n"));
    CHECK(corpus.size() == 2);
    CHECK(corpus.dropped == 1);
  }
  SUBCASE("missing file") {
    try {
      load_parallel(dir / "nope", dir / "nope2");
      FAIL("expected IoError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kIo);
    }
  }
  SUBCASE("CRLF and NFC on load") {
    auto corpus = load_parallel(dir.write("s", "cafe\xCC\x81\r\n"), dir.write("t", "x\r\n"));
    REQUIRE(corpus.size() == 1);
    CHECK(corpus.pairs[0].source == Sentence{"caf\xC3\xA9"});
    CHECK(corpus.pairs[0].target == Sentence{"x"});
  }
}

TEST_CASE("write_sentences round trips through SentenceReader") {
  TempDir dir("textcore-rw");
  std::vector<Sentence> in = {{"a", "b"}, {}, {"c"}};
  write_sentences(dir / "out.txt", in);
  SentenceReader reader(dir / "out.txt");
  std::vector<Sentence> out;
  while (auto s = reader.next()) out.push_back(*s);
  CHECK(out == in);
  CHECK(reader.line_number() == 3);
  CHECK(count_lines(dir / "out.txt") == 3);
}

TEST_CASE("edit_distance examples") {
  CHECK(edit_distance({"a", "b", "c"}, {"a", "b", "c"}) == 0);
  CHECK(edit_distance({"a", "b"}, {}) == 2);
  CHECK(edit_distance({"a", "b"}, {"x", "y", "z"}) == 3);
  CHECK(edit_distance({}, {}) == 0);
}

TEST_CASE("edit_rate examples") {
  CHECK(edit_rate({"a", "b", "c", "d", "e"}, {"a", "b", "c", "d", "e"}) == 0.0);
  CHECK(edit_rate({"a", "b"}, {"x", "y", "z"}) == doctest::Approx(1.5));
  CHECK(edit_rate({"a", "b", "c", "d", "e"}, {"a", "b", "c", "x", "e"}) == doctest::Approx(0.2));
  try {
    edit_rate({}, {"a"});
    FAIL("expected EmptySource");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kEmptySource);
  }
}

TEST_CASE("edit_distance is a metric with length bounds") {
  Gen gen(5);
  const auto vocab = testing::letters(4);
  for (int trial = 0; trial < 3000; ++trial) {
    auto a = gen.sentence(0, 8, vocab);
    auto b = gen.sentence(0, 8, vocab);
    auto c = gen.sentence(0, 8, vocab);
    const auto ab = edit_distance(a, b);
    CHECK(ab == edit_distance(b, a));
    CHECK((ab == 0) == (a == b));
    CHECK(edit_distance(a, c) <= ab + edit_distance(b, c));
    CHECK(ab <= std::max(a.size(), b.size()));
    CHECK(ab >= (a.size() > b.size() ? a.size() - b.size() : b.size() - a.size()));
  }
}

TEST_CASE("split_tabs keeps empty fields") {
  CHECK(split_tabs("a\tb") == std::vector<std::string>{"a", "b"});
  CHECK(split_tabs("a\t\tc") == std::vector<std::string>{"a", "", "c"});
  CHECK(split_tabs("") == std::vector<std::string>{""});
}
