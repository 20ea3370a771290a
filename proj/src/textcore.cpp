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

#include "pairforge/textcore.hpp"

#include <charconv>

#include <algorithm>
#include <cctype>
#include <memory>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "pairforge/error.hpp"

namespace pairforge {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

bool is_split_punct(char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?':
    case '"': case '\'': case '(': case ')':
      return true;
    default:
      return false;
  }
}

// Non-ASCII bytes count as word characters so UTF-8 letters never split.
bool is_word_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u);
}

void split_chunk(std::string_view chunk, Sentence& out) {
  std::string word;
  for (std::size_t i = 0; i < chunk.size(); ++i) {
    char c = chunk[i];
    if (is_split_punct(c)) {
      bool inner = (c == '\'' || c == '.') && i > 0 && i + 1 < chunk.size() &&
                   is_word_char(chunk[i - 1]) && is_word_char(chunk[i + 1]);
      if (!inner) {
        if (!word.empty()) out.push_back(std::move(word));
        word.clear();
        out.emplace_back(1, c);
        continue;
      }
    }
    word.push_back(c);
  }
  if (!word.empty()) out.push_back(std::move(word));
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

Sentence tokenize(std::string_view text) {
  Sentence out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) split_chunk(text.substr(start, i - start), out);
  }
  return out;
}

std::string detokenize(const Sentence& sentence) {
  std::string out;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    if (i) out.push_back(' ');
    out += sentence[i];
  }
  return out;
}

std::string normalize_nfc(std::string_view text) {
  bool ascii = std::all_of(text.begin(), text.end(), [](char c) {
    return static_cast<unsigned char>(c) < 0x80;
  });
  if (ascii) return std::string(text);
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return std::string(text);
  icu::UnicodeString in = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString normalized = nfc->normalize(in, status);
  if (U_FAILURE(status)) return std::string(text);
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

SentenceReader::SentenceReader(const std::filesystem::path& path)
    : in_(path) {
  if (!in_) throw Error(ErrorKind::kIo, "cannot open " + path.string());
}

std::optional<Sentence> SentenceReader::next() {
  std::string line;
  if (!std::getline(in_, line)) return std::nullopt;
  ++line_;
  return tokenize(normalize_nfc(strip_cr(std::move(line))));
}

std::vector<Sentence> load_sentences(const std::filesystem::path& path) {
  SentenceReader reader(path);
  std::vector<Sentence> out;
  while (auto s = reader.next()) out.push_back(std::move(*s));
  return out;
}

std::size_t count_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

void write_sentences(const std::filesystem::path& path,
                     const std::vector<Sentence>& sentences) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  for (const auto& s : sentences) out << detokenize(s) << '\n';
}

ParallelCorpus load_parallel(const std::filesystem::path& source_path,
                             const std::filesystem::path& target_path) {
  auto sources = load_sentences(source_path);
  auto targets = load_sentences(target_path);
  if (sources.size() != targets.size()) {
    throw Error(ErrorKind::kLineCountMismatch,
                source_path.string() + " has " +
                    std::to_string(sources.size()) + " lines, " +
                    target_path.string() + " has " +
                    std::to_string(targets.size()));
  }
  ParallelCorpus corpus;
  corpus.name = source_path.stem().string();
  corpus.pairs.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (sources[i].empty() || targets[i].empty()) {
      ++corpus.dropped;
      continue;
    }
    corpus.pairs.push_back({std::move(sources[i]), std::move(targets[i])});
  }
  return corpus;
}

std::size_t edit_distance(const Sentence& a, const Sentence& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double edit_rate(const Sentence& poor, const Sentence& good) {
  if (poor.empty()) throw Error(ErrorKind::kEmptySource, "poor sentence is empty");
  return static_cast<double>(edit_distance(poor, good)) /
         static_cast<double>(poor.size());
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

double parse_real(std::string_view text, std::string_view what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw Error(ErrorKind::kFormat, "bad " + std::string(what) + ": '" + std::string(text) + "'");
  return value;
}

std::size_t parse_count(std::string_view text, std::string_view what) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw Error(ErrorKind::kFormat, "bad " + std::string(what) + ": '" + std::string(text) + "'");
  return value;
}

}  // namespace pairforge
