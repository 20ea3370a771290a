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

#include "pairforge/lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "pairforge/error.hpp"

namespace pairforge {

namespace {

constexpr double kBosLogprob = -99.0;

NGramKey make_key(std::span<const WordId> ids) {
  NGramKey key;
  key.size = static_cast<std::uint8_t>(ids.size());
  std::copy(ids.begin(), ids.end(), key.ids.begin());
  return key;
}

NGramKey drop_first(const NGramKey& key) {
  NGramKey out;
  out.size = key.size - 1;
  for (std::uint8_t i = 1; i < key.size; ++i) out.ids[i - 1] = key.ids[i];
  return out;
}

NGramKey drop_last(const NGramKey& key) {
  NGramKey out = key;
  --out.size;
  out.ids[out.size] = 0;
  return out;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

WordId NGramModel::add_word(const std::string& w) {
  auto [it, inserted] = index_.emplace(w, static_cast<WordId>(words_.size()));
  if (inserted) words_.push_back(w);
  return it->second;
}

void NGramModel::finalize_specials() {
  bos_ = add_word(std::string(kBos));
  eos_ = add_word(std::string(kEos));
  unk_ = add_word(std::string(kUnk));
}

WordId NGramModel::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? unk_ : it->second;
}

const NGramModel::Entry* NGramModel::find(const NGramKey& key) const {
  if (key.size == 0 || key.size > order_) return nullptr;
  const auto& table = tables_[key.size - 1];
  auto it = table.find(key);
  return it == table.end() ? nullptr : &it->second;
}

double NGramModel::score(std::span<const WordId> context, WordId word) const {
  std::size_t k = std::min<std::size_t>(context.size(), order_ - 1);
  auto ctx = context.subspan(context.size() - k);
  double acc = 0.0;
  std::array<WordId, kMaxLmOrder> buf{};
  for (std::size_t len = k;; --len) {
    auto tail = ctx.subspan(ctx.size() - len);
    std::copy(tail.begin(), tail.end(), buf.begin());
    buf[len] = word;
    if (const Entry* e = find(make_key({buf.data(), len + 1}))) {
      return acc + e->logprob;
    }
    if (len == 0) break;
    if (const Entry* c = find(make_key(tail))) acc += c->backoff;
  }
  // Unreachable for a well-formed model: every vocabulary word has a unigram.
  return acc + kBosLogprob;
}

std::vector<WordId> NGramModel::predictable() const {
  std::vector<WordId> out;
  for (WordId w = 0; w < words_.size(); ++w)
    if (w != bos_) out.push_back(w);
  return out;
}

NGramModel train_lm(const std::vector<Sentence>& corpus, int order) {
  if (corpus.empty()) throw Error(ErrorKind::kEmptyCorpus, "no training sentences");
  if (order < 1 || order > kMaxLmOrder) {
    throw Error(ErrorKind::kInvalidArgument,
                "lm order must be in 1..5, got " + std::to_string(order));
  }

  std::map<std::string, std::size_t> freq;
  for (const auto& s : corpus)
    for (const auto& t : s) ++freq[t];

  NGramModel model;
  model.order_ = order;
  std::set<std::string> vocab{std::string(kBos), std::string(kEos),
                              std::string(kUnk)};
  for (const auto& [w, c] : freq)
    if (c >= 2) vocab.insert(w);
  for (const auto& w : vocab) model.add_word(w);
  model.finalize_specials();

  using CountTable = std::unordered_map<NGramKey, double, NGramKeyHash>;
  std::vector<CountTable> raw(order);
  std::vector<WordId> seq;
  for (const auto& s : corpus) {
    seq.clear();
    seq.push_back(model.bos_);
    for (const auto& t : s) seq.push_back(model.id(t));
    seq.push_back(model.eos_);
    for (std::size_t end = 1; end < seq.size(); ++end) {
      for (int n = 1; n <= order && static_cast<std::size_t>(n) <= end + 1; ++n) {
        std::span<const WordId> gram(seq.data() + end + 1 - n, n);
        raw[n - 1][make_key(gram)] += 1.0;
      }
    }
  }

  // Lower orders use continuation counts, except n-grams opening with <s>
  // which have no left context.
  std::vector<CountTable> adjusted(order);
  adjusted[order - 1] = raw[order - 1];
  for (int n = order - 1; n >= 1; --n) {
    for (const auto& [key, count] : raw[n - 1])
      if (key.ids[0] == model.bos_) adjusted[n - 1][key] = count;
    for (const auto& [key, count] : raw[n]) {
      NGramKey suffix = drop_first(key);
      if (suffix.ids[0] != model.bos_) adjusted[n - 1][suffix] += 1.0;
    }
  }

  struct ContextStats {
    double total = 0.0;
    double types = 0.0;
  };
  const double d = kKneserNeyDiscount;
  model.tables_.assign(order, {});

  auto predictable = model.predictable();
  {
    ContextStats root;
    for (const auto& [key, a] : adjusted[0]) {
      root.total += a;
      root.types += 1.0;
    }
    const double uniform = 1.0 / static_cast<double>(predictable.size());
    const double gamma = d * root.types / root.total;
    for (WordId w : predictable) {
      NGramKey key = make_key({&w, 1});
      auto it = adjusted[0].find(key);
      double a = it == adjusted[0].end() ? 0.0 : it->second;
      double p = std::max(a - d, 0.0) / root.total + gamma * uniform;
      model.tables_[0][key].logprob = std::log10(p);
    }
    WordId bos = model.bos_;
    model.tables_[0][make_key({&bos, 1})].logprob = kBosLogprob;
  }

  for (int n = 2; n <= order; ++n) {
    std::unordered_map<NGramKey, ContextStats, NGramKeyHash> contexts;
    for (const auto& [key, a] : adjusted[n - 1]) {
      auto& st = contexts[drop_last(key)];
      st.total += a;
      st.types += 1.0;
    }
    for (const auto& [ctx, st] : contexts) {
      model.tables_[n - 2][ctx].backoff = std::log10(d * st.types / st.total);
    }
    std::vector<std::pair<NGramKey, double>> probs;
    probs.reserve(adjusted[n - 1].size());
    for (const auto& [key, a] : adjusted[n - 1]) {
      NGramKey ctx = drop_last(key);
      const auto& st = contexts.at(ctx);
      NGramKey lower_ctx = drop_first(ctx);
      // Interpolation weight times the lower-order estimate; the backoff chain
      // below order n is already complete.
      double lower = std::pow(
          10.0, model.score({lower_ctx.ids.data(), lower_ctx.size},
                            key.ids[key.size - 1]));
      double p = std::max(a - d, 0.0) / st.total + d * st.types / st.total * lower;
      probs.emplace_back(key, std::log10(p));
    }
    for (const auto& [key, lp] : probs) model.tables_[n - 1][key].logprob = lp;
  }
  return model;
}

double logprob(const NGramModel& model, const Sentence& sentence) {
  std::vector<WordId> history{model.bos()};
  double total = 0.0;
  for (const auto& t : sentence) {
    WordId w = model.id(t);
    total += model.score(history, w);
    history.push_back(w);
  }
  total += model.score(history, model.eos());
  return total;
}

double perplexity(const NGramModel& model, const std::vector<Sentence>& corpus) {
  if (corpus.empty()) throw Error(ErrorKind::kEmptyCorpus, "no sentences to score");
  double total = 0.0;
  double events = 0.0;
  for (const auto& s : corpus) {
    total += logprob(model, s);
    events += static_cast<double>(s.size() + 1);
  }
  return std::pow(10.0, -total / events);
}

void NGramModel::write_arpa(std::ostream& out) const {
  out << "\\data\\\n";
  for (int n = 1; n <= order_; ++n)
    out << "ngram " << n << "=" << tables_[n - 1].size() << "\n";
  for (int n = 1; n <= order_; ++n) {
    out << "\n\\" << n << "-grams:\n";
    std::vector<std::pair<std::string, const Entry*>> rows;
    rows.reserve(tables_[n - 1].size());
    for (const auto& [key, entry] : tables_[n - 1]) {
      std::string text;
      for (std::uint8_t i = 0; i < key.size; ++i) {
        if (i) text.push_back(' ');
        text += words_[key.ids[i]];
      }
      rows.emplace_back(std::move(text), &entry);
    }
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [text, e] : rows) {
      out << format_number(e->logprob) << '\t' << text;
      if (n < order_) out << '\t' << format_number(e->backoff);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

void NGramModel::write_arpa(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  write_arpa(out);
}

NGramModel NGramModel::read_arpa(std::istream& in) {
  NGramModel model;
  std::string line;
  std::vector<std::size_t> declared;
  bool in_data = false;
  int section = 0;
  std::vector<std::vector<std::pair<std::vector<std::string>, Entry>>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "\\data\\") {
      in_data = true;
      continue;
    }
    if (line == "\\end\\") break;
    if (line.size() > 1 && line[0] == '\\') {
      in_data = false;
      auto dash = line.find("-grams:");
      if (dash == std::string::npos)
        throw Error(ErrorKind::kFormat, "bad ARPA section: " + line);
      section = static_cast<int>(parse_count(std::string_view(line).substr(1, dash - 1), "ARPA section"));
      if (section < 1 || section > kMaxLmOrder)
        throw Error(ErrorKind::kFormat, "bad ARPA section: " + line);
      if (static_cast<int>(rows.size()) < section) rows.resize(section);
      continue;
    }
    if (in_data) {
      if (line.rfind("ngram ", 0) != 0)
        throw Error(ErrorKind::kFormat, "bad ARPA header line: " + line);
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw Error(ErrorKind::kFormat, "bad ARPA header line: " + line);
      declared.push_back(parse_count(std::string_view(line).substr(eq + 1), "ARPA count"));
      continue;
    }
    if (section == 0) throw Error(ErrorKind::kFormat, "ARPA data outside section");
    auto fields = split_tabs(line);
    if (fields.size() < 2)
      throw Error(ErrorKind::kFormat, "bad ARPA entry: " + line);
    Entry e;
    e.logprob = parse_real(fields[0], "ARPA log probability");
    if (fields.size() > 2) e.backoff = parse_real(fields[2], "ARPA backoff");
    std::istringstream words(fields[1]);
    std::vector<std::string> gram;
    for (std::string w; words >> w;) gram.push_back(w);
    if (static_cast<int>(gram.size()) != section)
      throw Error(ErrorKind::kFormat, "n-gram length mismatch: " + line);
    rows[section - 1].emplace_back(std::move(gram), e);
  }
  if (rows.empty() || rows[0].empty())
    throw Error(ErrorKind::kFormat, "ARPA model has no unigrams");
  for (std::size_t n = 0; n < declared.size() && n < rows.size(); ++n) {
    if (declared[n] != rows[n].size())
      throw Error(ErrorKind::kFormat, "ARPA count mismatch at order " +
                                          std::to_string(n + 1));
  }
  std::set<std::string> vocab;
  for (const auto& [gram, e] : rows[0]) vocab.insert(gram[0]);
  for (auto special : {kBos, kEos, kUnk}) {
    if (!vocab.count(std::string(special)))
      throw Error(ErrorKind::kFormat,
                  "ARPA model lacks " + std::string(special));
  }
  for (const auto& w : vocab) model.add_word(w);
  model.finalize_specials();
  model.order_ = static_cast<int>(rows.size());
  model.tables_.assign(model.order_, {});
  for (std::size_t n = 0; n < rows.size(); ++n) {
    for (const auto& [gram, e] : rows[n]) {
      std::vector<WordId> ids;
      for (const auto& w : gram) {
        auto it = model.index_.find(w);
        if (it == model.index_.end())
          throw Error(ErrorKind::kFormat, "n-gram word not in unigrams: " + w);
        ids.push_back(it->second);
      }
      model.tables_[n][make_key(ids)] = e;
    }
  }
  return model;
}

NGramModel NGramModel::read_arpa(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return read_arpa(in);
}

}  // namespace pairforge
