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

#include "pairforge/align.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pairforge/error.hpp"

namespace pairforge {

namespace {

constexpr double kLexFloor = 1e-12;

std::uint64_t pack(std::uint32_t s, std::uint32_t t) {
  return (static_cast<std::uint64_t>(s) << 32) | t;
}

std::string format_prob(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<std::string> split_bars(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find("|||", start);
    std::string field = line.substr(start, pos == std::string::npos
                                               ? std::string::npos
                                               : pos - start);
    auto b = field.find_first_not_of(' ');
    auto e = field.find_last_not_of(' ');
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    if (pos == std::string::npos) break;
    start = pos + 3;
  }
  return out;
}

class Interner {
 public:
  std::uint32_t get(const std::string& w) {
    auto [it, inserted] = ids_.emplace(w, static_cast<std::uint32_t>(words_.size()));
    if (inserted) words_.push_back(w);
    return it->second;
  }
  const std::string& word(std::uint32_t id) const { return words_[id]; }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::string> words_;
};

}  // namespace

double TranslationTable::operator()(std::string_view source,
                                    std::string_view target) const {
  auto row = rows_.find(std::string(source));
  if (row == rows_.end()) return 0.0;
  auto it = row->second.find(std::string(target));
  return it == row->second.end() ? 0.0 : it->second;
}

void TranslationTable::set(const std::string& source, const std::string& target,
                           double p) {
  rows_[source][target] = p;
}

void TranslationTable::write(std::ostream& out) const {
  std::vector<std::string> sources;
  for (const auto& [s, row] : rows_) sources.push_back(s);
  std::sort(sources.begin(), sources.end());
  for (const auto& s : sources) {
    const auto& row = rows_.at(s);
    std::vector<std::pair<std::string, double>> sorted(row.begin(), row.end());
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [t, p] : sorted) out << s << ' ' << t << ' ' << format_prob(p) << '\n';
  }
}

void TranslationTable::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  write(out);
}

TranslationTable TranslationTable::read(std::istream& in) {
  TranslationTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string s, t;
    double p;
    if (!(fields >> s >> t >> p))
      throw Error(ErrorKind::kFormat, "bad lexical table line: " + line);
    table.set(s, t, p);
  }
  return table;
}

TranslationTable TranslationTable::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return read(in);
}

ParallelCorpus swapped(const ParallelCorpus& corpus) {
  ParallelCorpus out;
  out.name = corpus.name + ".swapped";
  out.dropped = corpus.dropped;
  out.pairs.reserve(corpus.size());
  for (const auto& p : corpus.pairs) out.pairs.push_back({p.target, p.source});
  return out;
}

TranslationTable em_model1(const ParallelCorpus& corpus, int iterations,
                           std::vector<double>* log_likelihood) {
  if (corpus.empty()) throw Error(ErrorKind::kEmptyCorpus, "no sentence pairs");
  if (iterations < 1)
    throw Error(ErrorKind::kInvalidArgument, "iterations must be >= 1");

  Interner src_vocab, tgt_vocab;
  const std::uint32_t null_id = src_vocab.get(std::string(kNullToken));
  std::vector<std::vector<std::uint32_t>> src_ids, tgt_ids;
  src_ids.reserve(corpus.size());
  tgt_ids.reserve(corpus.size());
  for (const auto& p : corpus.pairs) {
    std::vector<std::uint32_t> s{null_id};
    for (const auto& w : p.source) s.push_back(src_vocab.get(w));
    std::vector<std::uint32_t> t;
    for (const auto& w : p.target) t.push_back(tgt_vocab.get(w));
    src_ids.push_back(std::move(s));
    tgt_ids.push_back(std::move(t));
  }

  // Uniform over the targets each source word co-occurs with.
  std::unordered_map<std::uint64_t, double> t_table;
  std::vector<double> cooc(src_vocab.size(), 0.0);
  for (std::size_t k = 0; k < src_ids.size(); ++k) {
    for (auto s : src_ids[k]) {
      for (auto t : tgt_ids[k]) {
        if (t_table.emplace(pack(s, t), 0.0).second) cooc[s] += 1.0;
      }
    }
  }
  for (auto& [key, p] : t_table) p = 1.0 / cooc[key >> 32];

  auto e_step = [&](std::unordered_map<std::uint64_t, double>* counts,
                    std::vector<double>* totals) {
    double ll = 0.0;
    for (std::size_t k = 0; k < src_ids.size(); ++k) {
      const auto& s = src_ids[k];
      const double norm = static_cast<double>(s.size());
      for (auto t : tgt_ids[k]) {
        double denom = 0.0;
        for (auto si : s) denom += t_table[pack(si, t)];
        ll += std::log(denom / norm);
        if (!counts) continue;
        for (auto si : s) {
          double c = t_table[pack(si, t)] / denom;
          (*counts)[pack(si, t)] += c;
          (*totals)[si] += c;
        }
      }
    }
    return ll;
  };

  if (log_likelihood) log_likelihood->clear();
  for (int it = 0; it < iterations; ++it) {
    std::unordered_map<std::uint64_t, double> counts;
    counts.reserve(t_table.size());
    std::vector<double> totals(src_vocab.size(), 0.0);
    double ll = e_step(&counts, &totals);
    if (log_likelihood) log_likelihood->push_back(ll);
    for (auto& [key, p] : t_table) {
      auto c = counts.find(key);
      p = c == counts.end() ? 0.0 : c->second / totals[key >> 32];
    }
  }
  if (log_likelihood) log_likelihood->push_back(e_step(nullptr, nullptr));

  TranslationTable table;
  for (const auto& [key, p] : t_table) {
    table.set(src_vocab.word(static_cast<std::uint32_t>(key >> 32)),
              tgt_vocab.word(static_cast<std::uint32_t>(key & 0xffffffffu)), p);
  }
  return table;
}

double model1_log_likelihood(const TranslationTable& table,
                             const ParallelCorpus& corpus) {
  double ll = 0.0;
  for (const auto& p : corpus.pairs) {
    const double norm = static_cast<double>(p.source.size() + 1);
    for (const auto& t : p.target) {
      double denom = table(kNullToken, t);
      for (const auto& s : p.source) denom += table(s, t);
      ll += std::log(denom / norm);
    }
  }
  return ll;
}

AlignmentMatrix::AlignmentMatrix(std::size_t source_len, std::size_t target_len,
                                 std::set<AlignmentLink> links)
    : source_len(source_len), target_len(target_len), links(std::move(links)) {
  for (const auto& [s, t] : this->links) {
    if (s >= source_len || t >= target_len) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "link " + std::to_string(s) + "-" + std::to_string(t) +
                      " outside " + std::to_string(source_len) + "x" +
                      std::to_string(target_len));
    }
  }
}

AlignmentMatrix AlignmentMatrix::transposed() const {
  std::set<AlignmentLink> flipped;
  for (const auto& [s, t] : links) flipped.emplace(t, s);
  return AlignmentMatrix(target_len, source_len, std::move(flipped));
}

AlignmentMatrix viterbi_align(const TranslationTable& table,
                              const SentencePair& pair) {
  std::set<AlignmentLink> links;
  for (std::size_t j = 0; j < pair.target.size(); ++j) {
    double best = 0.0;
    std::size_t best_i = pair.source.size();
    for (std::size_t i = 0; i < pair.source.size(); ++i) {
      double p = table(pair.source[i], pair.target[j]);
      if (p > best) {
        best = p;
        best_i = i;
      }
    }
    if (best_i == pair.source.size()) continue;
    if (table(kNullToken, pair.target[j]) > best) continue;
    links.emplace(best_i, j);
  }
  return AlignmentMatrix(pair.source.size(), pair.target.size(), std::move(links));
}

AlignmentMatrix symmetrize(const AlignmentMatrix& forward,
                           const AlignmentMatrix& reverse) {
  if (forward.source_len != reverse.source_len ||
      forward.target_len != reverse.target_len) {
    throw Error(ErrorKind::kDimensionMismatch,
                "forward " + std::to_string(forward.source_len) + "x" +
                    std::to_string(forward.target_len) + " vs reverse " +
                    std::to_string(reverse.source_len) + "x" +
                    std::to_string(reverse.target_len));
  }
  std::set<AlignmentLink> uni = forward.links;
  uni.insert(reverse.links.begin(), reverse.links.end());
  std::set<AlignmentLink> out;
  std::vector<bool> src_aligned(forward.source_len, false);
  std::vector<bool> tgt_aligned(forward.target_len, false);
  for (const auto& link : forward.links) {
    if (reverse.links.count(link)) {
      out.insert(link);
      src_aligned[link.first] = true;
      tgt_aligned[link.second] = true;
    }
  }
  static constexpr int kNeighbors[8][2] = {{-1, 0}, {0, -1}, {1, 0},  {0, 1},
                                           {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  const auto src_len = static_cast<long>(forward.source_len);
  const auto tgt_len = static_cast<long>(forward.target_len);
  bool added = true;
  while (added) {
    added = false;
    for (long s = 0; s < src_len; ++s) {
      for (long t = 0; t < tgt_len; ++t) {
        if (!out.count({s, t})) continue;
        for (const auto& d : kNeighbors) {
          long ns = s + d[0], nt = t + d[1];
          if (ns < 0 || nt < 0 || ns >= src_len || nt >= tgt_len) continue;
          AlignmentLink cand{static_cast<std::size_t>(ns), static_cast<std::size_t>(nt)};
          if (out.count(cand) || !uni.count(cand)) continue;
          if (src_aligned[cand.first] && tgt_aligned[cand.second]) continue;
          out.insert(cand);
          src_aligned[cand.first] = true;
          tgt_aligned[cand.second] = true;
          added = true;
        }
      }
    }
  }
  return AlignmentMatrix(forward.source_len, forward.target_len, std::move(out));
}

std::vector<ExtractedPhrase> extract_phrases(const SentencePair& pair,
                                             const AlignmentMatrix& alignment,
                                             std::size_t max_len) {
  std::vector<ExtractedPhrase> out;
  const std::size_t src_len = pair.source.size();
  const std::size_t tgt_len = pair.target.size();
  if (alignment.source_len != src_len || alignment.target_len != tgt_len) {
    throw Error(ErrorKind::kDimensionMismatch,
                "alignment does not match sentence pair lengths");
  }
  std::vector<std::vector<std::size_t>> by_src(src_len), by_tgt(tgt_len);
  for (const auto& [s, t] : alignment.links) {
    by_src[s].push_back(t);
    by_tgt[t].push_back(s);
  }

  auto emit = [&](std::size_t ss, std::size_t se, std::size_t ts, std::size_t te) {
    ExtractedPhrase ph;
    ph.source.assign(pair.source.begin() + ss, pair.source.begin() + se + 1);
    ph.target.assign(pair.target.begin() + ts, pair.target.begin() + te + 1);
    for (const auto& [s, t] : alignment.links) {
      if (s >= ss && s <= se && t >= ts && t <= te) ph.links.emplace_back(s - ss, t - ts);
    }
    out.push_back(std::move(ph));
  };

  for (std::size_t ss = 0; ss < src_len; ++ss) {
    for (std::size_t se = ss; se < src_len && se - ss < max_len; ++se) {
      std::size_t tmin = tgt_len, tmax = 0;
      bool any = false;
      for (std::size_t s = ss; s <= se; ++s) {
        for (auto t : by_src[s]) {
          tmin = std::min(tmin, t);
          tmax = std::max(tmax, t);
          any = true;
        }
      }
      if (!any || tmax - tmin >= max_len) continue;
      bool consistent = true;
      for (std::size_t t = tmin; t <= tmax && consistent; ++t) {
        for (auto s : by_tgt[t]) {
          if (s < ss || s > se) {
            consistent = false;
            break;
          }
        }
      }
      if (!consistent) continue;
      // Grow over unaligned target words on either side.
      for (std::size_t ts = tmin;;) {
        for (std::size_t te = tmax; te < tgt_len && te - ts < max_len; ++te) {
          if (te > tmax && !by_tgt[te].empty()) break;
          emit(ss, se, ts, te);
        }
        if (ts == 0 || !by_tgt[ts - 1].empty() || tmax - (ts - 1) >= max_len) break;
        --ts;
      }
    }
  }
  return out;
}

void PhraseTable::add(PhraseTableEntry entry) {
  auto& bucket = entries_[detokenize(entry.source)];
  auto pos = std::lower_bound(
      bucket.begin(), bucket.end(), entry.target,
      [](const PhraseTableEntry& e, const Sentence& t) { return e.target < t; });
  if (pos != bucket.end() && pos->target == entry.target) {
    *pos = std::move(entry);
    return;
  }
  max_phrase_len_ = std::max({max_phrase_len_, entry.source.size(), entry.target.size()});
  bucket.insert(pos, std::move(entry));
  ++size_;
}

const std::vector<PhraseTableEntry>& PhraseTable::lookup(const Sentence& source) const {
  static const std::vector<PhraseTableEntry> kEmpty;
  auto it = entries_.find(detokenize(source));
  return it == entries_.end() ? kEmpty : it->second;
}

bool PhraseTable::contains(const Sentence& source) const {
  return entries_.count(detokenize(source)) != 0;
}

void PhraseTable::write(std::ostream& out) const {
  for (const auto& [src, bucket] : entries_) {
    for (const auto& e : bucket) {
      out << src << " ||| " << detokenize(e.target) << " |||";
      for (double f : e.features) out << ' ' << format_prob(f);
      out << '\n';
    }
  }
}

void PhraseTable::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  write(out);
}

PhraseTable PhraseTable::read(std::istream& in) {
  PhraseTable table(1);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_bars(line);
    if (fields.size() < 3)
      throw Error(ErrorKind::kFormat, "bad phrase table line: " + line);
    PhraseTableEntry e;
    e.source = tokenize(fields[0]);
    e.target = tokenize(fields[1]);
    std::istringstream scores(fields[2]);
    for (auto& f : e.features) {
      if (!(scores >> f))
        throw Error(ErrorKind::kFormat, "phrase table line needs 4 scores: " + line);
    }
    if (e.source.empty() || e.target.empty())
      throw Error(ErrorKind::kFormat, "empty phrase in line: " + line);
    table.add(std::move(e));
  }
  return table;
}

PhraseTable PhraseTable::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return read(in);
}

PhraseTable build_phrase_table(const ParallelCorpus& corpus,
                               const std::vector<AlignmentMatrix>& alignments,
                               std::size_t max_len,
                               const TranslationTable& lex_fwd,
                               const TranslationTable& lex_rev) {
  if (alignments.size() != corpus.size()) {
    throw Error(ErrorKind::kLengthMismatch,
                std::to_string(corpus.size()) + " pairs but " +
                    std::to_string(alignments.size()) + " alignments");
  }
  struct Stats {
    double count = 0.0;
    double lex_ts = 0.0;  // summed over occurrences
    double lex_st = 0.0;
  };
  std::map<std::pair<Sentence, Sentence>, Stats> pairs;
  std::map<Sentence, double> src_totals, tgt_totals;

  for (std::size_t k = 0; k < corpus.size(); ++k) {
    for (auto& ph : extract_phrases(corpus.pairs[k], alignments[k], max_len)) {
      // lex(t|s): per target word, mean t(t|s) over its links, else t(t|NULL).
      double lex_ts = 1.0;
      for (std::size_t j = 0; j < ph.target.size(); ++j) {
        double sum = 0.0;
        int n = 0;
        for (const auto& [s, t] : ph.links)
          if (t == j) sum += lex_fwd(ph.source[s], ph.target[j]), ++n;
        lex_ts *= n ? sum / n : lex_fwd(kNullToken, ph.target[j]);
      }
      double lex_st = 1.0;
      for (std::size_t i = 0; i < ph.source.size(); ++i) {
        double sum = 0.0;
        int n = 0;
        for (const auto& [s, t] : ph.links)
          if (s == i) sum += lex_rev(ph.target[t], ph.source[i]), ++n;
        lex_st *= n ? sum / n : lex_rev(kNullToken, ph.source[i]);
      }
      auto& st = pairs[{ph.source, ph.target}];
      st.count += ph.count;
      st.lex_ts += ph.count * lex_ts;
      st.lex_st += ph.count * lex_st;
      src_totals[ph.source] += ph.count;
      tgt_totals[ph.target] += ph.count;
    }
  }

  PhraseTable table(max_len);
  for (const auto& [key, st] : pairs) {
    PhraseTableEntry e;
    e.source = key.first;
    e.target = key.second;
    e.features = {st.count / src_totals[key.first], st.count / tgt_totals[key.second],
                  std::clamp(st.lex_ts / st.count, kLexFloor, 1.0),
                  std::clamp(st.lex_st / st.count, kLexFloor, 1.0)};
    table.add(std::move(e));
  }
  return table;
}

void write_alignments(const std::filesystem::path& path,
                      const std::vector<AlignmentMatrix>& alignments) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  for (const auto& a : alignments) {
    bool first = true;
    for (const auto& [s, t] : a.links) {
      if (!first) out << ' ';
      out << s << '-' << t;
      first = false;
    }
    out << '\n';
  }
}

std::vector<AlignmentMatrix> read_alignments(const std::filesystem::path& path,
                                             const ParallelCorpus& corpus) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<AlignmentMatrix> out;
  std::string line;
  while (std::getline(in, line)) {
    if (out.size() >= corpus.size())
      throw Error(ErrorKind::kLengthMismatch, "more alignment lines than pairs");
    const auto& pair = corpus.pairs[out.size()];
    std::set<AlignmentLink> links;
    std::istringstream fields(line);
    for (std::string tok; fields >> tok;) {
      auto dash = tok.find('-');
      if (dash == std::string::npos)
        throw Error(ErrorKind::kFormat, "bad alignment link: " + tok);
      links.emplace(parse_count(std::string_view(tok).substr(0, dash), "alignment link"),
                    parse_count(std::string_view(tok).substr(dash + 1), "alignment link"));
    }
    out.emplace_back(pair.source.size(), pair.target.size(), std::move(links));
  }
  if (out.size() != corpus.size())
    throw Error(ErrorKind::kLengthMismatch, "fewer alignment lines than pairs");
  return out;
}

WordAlignment align_corpus(const ParallelCorpus& corpus, int iterations) {
  WordAlignment result;
  result.forward = em_model1(corpus, iterations);
  auto reversed = swapped(corpus);
  result.reverse = em_model1(reversed, iterations);
  result.alignments.reserve(corpus.size());
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    auto fwd = viterbi_align(result.forward, corpus.pairs[k]);
    auto rev = viterbi_align(result.reverse, reversed.pairs[k]).transposed();
    result.alignments.push_back(symmetrize(fwd, rev));
  }
  return result;
}

}  // namespace pairforge
