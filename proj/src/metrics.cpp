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

#include "pairforge/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "pairforge/error.hpp"

namespace pairforge {

std::string_view generator_name(Generator g) {
  switch (g) {
    case Generator::kSmtNmt: return "SMT_NMT";
    case Generator::kSmtGold: return "SMT_GOLD";
    case Generator::kCorruption: return "CORRUPTION";
    case Generator::kRoundTrip: return "ROUND_TRIP";
    case Generator::kBackTranslation: return "BACK_TRANSLATION";
  }
  return "UNKNOWN";
}

Generator parse_generator(std::string_view tag) {
  for (auto g : kAllGenerators)
    if (generator_name(g) == tag) return g;
  throw Error(ErrorKind::kFormat, "unknown generator tag: " + std::string(tag));
}

PairRecord make_record(Sentence poor, Sentence good, Generator generator,
                       std::size_t source_id) {
  PairRecord r;
  r.edit_rate = edit_rate(poor, good);
  r.poor = std::move(poor);
  r.good = std::move(good);
  r.generator = generator;
  r.source_id = source_id;
  return r;
}

// ---------------------------------------------------------------- BLEU

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (std::size_t n = 0; n < kBleuOrder; ++n) {
    matches[n] += o.matches[n];
    totals[n] += o.totals[n];
  }
  hyp_len += o.hyp_len;
  ref_len += o.ref_len;
  return *this;
}

BleuStats& BleuStats::operator-=(const BleuStats& o) {
  for (std::size_t n = 0; n < kBleuOrder; ++n) {
    matches[n] -= o.matches[n];
    totals[n] -= o.totals[n];
  }
  hyp_len -= o.hyp_len;
  ref_len -= o.ref_len;
  return *this;
}

double BleuStats::precision(std::size_t n) const {
  const double total = totals[n - 1];
  return total > 0.0 ? matches[n - 1] / total : 0.0;
}

double BleuStats::score() const {
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= kBleuOrder; ++n) {
    double p = precision(n);
    if (p <= 0.0) return 0.0;
    log_sum += std::log(p);
  }
  double bp = hyp_len < ref_len ? std::exp(1.0 - ref_len / hyp_len) : 1.0;
  return 100.0 * bp * std::exp(log_sum / static_cast<double>(kBleuOrder));
}

BleuStats bleu_stats(const Sentence& ref, const Sentence& hyp) {
  BleuStats st;
  st.hyp_len = static_cast<double>(hyp.size());
  st.ref_len = static_cast<double>(ref.size());
  for (std::size_t n = 1; n <= kBleuOrder; ++n) {
    if (hyp.size() < n) break;
    std::map<std::vector<std::string_view>, int> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i)
      ++ref_counts[std::vector<std::string_view>(ref.begin() + i, ref.begin() + i + n)];
    std::map<std::vector<std::string_view>, int> hyp_counts;
    for (std::size_t i = 0; i + n <= hyp.size(); ++i)
      ++hyp_counts[std::vector<std::string_view>(hyp.begin() + i, hyp.begin() + i + n)];
    double matched = 0.0;
    for (const auto& [gram, c] : hyp_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(c, it->second);
    }
    st.matches[n - 1] = matched;
    st.totals[n - 1] = static_cast<double>(hyp.size() - n + 1);
  }
  return st;
}

double bleu(const std::vector<Sentence>& refs, const std::vector<Sentence>& hyps) {
  if (refs.size() != hyps.size()) {
    throw Error(ErrorKind::kLengthMismatch,
                std::to_string(refs.size()) + " references vs " +
                    std::to_string(hyps.size()) + " hypotheses");
  }
  if (refs.empty()) throw Error(ErrorKind::kEmptyInput, "no sentences to score");
  BleuStats total;
  for (std::size_t i = 0; i < refs.size(); ++i) total += bleu_stats(refs[i], hyps[i]);
  return total.score();
}

// ---------------------------------------------------------------- edits

std::string_view error_type_name(ErrorType t) {
  switch (t) {
    case ErrorType::kVerbForm: return "VERB_FORM";
    case ErrorType::kNounNum: return "NOUN_NUM";
    case ErrorType::kDet: return "DET";
    case ErrorType::kPrep: return "PREP";
    case ErrorType::kOrth: return "ORTH";
    case ErrorType::kWordOrder: return "WORD_ORDER";
    case ErrorType::kMissing: return "MISSING";
    case ErrorType::kUnnecessary: return "UNNECESSARY";
    case ErrorType::kOther: return "OTHER";
  }
  return "OTHER";
}

ErrorType parse_error_type(std::string_view name) {
  for (auto t : kAllErrorTypes)
    if (error_type_name(t) == name) return t;
  throw Error(ErrorKind::kFormat, "unknown error type: " + std::string(name));
}

Sentence EditScript::apply() const {
  Sentence out;
  std::size_t pos = 0;
  for (const auto& e : edits) {
    out.insert(out.end(), source.begin() + pos, source.begin() + e.start);
    out.insert(out.end(), e.replacement.begin(), e.replacement.end());
    pos = e.end;
  }
  out.insert(out.end(), source.begin() + pos, source.end());
  return out;
}

namespace {

std::string letters_only(const Sentence& tokens) {
  std::string out;
  for (const auto& t : tokens)
    for (char c : t)
      if (!std::ispunct(static_cast<unsigned char>(c)))
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

bool plural_pair(const std::string& a, const std::string& b) {
  auto one_way = [](const std::string& sing, const std::string& plural) {
    if (plural == sing + "s" || plural == sing + "es") return true;
    return sing.size() > 1 && sing.back() == 'y' &&
           plural == sing.substr(0, sing.size() - 1) + "ies";
  };
  return one_way(a, b) || one_way(b, a);
}

}  // namespace

ErrorType classify_edit(const Edit& edit, const Sentence& source,
                        const WordLists& lists) {
  if (edit.start == edit.end) return ErrorType::kMissing;
  if (edit.replacement.empty()) return ErrorType::kUnnecessary;
  const Sentence original(source.begin() + edit.start, source.begin() + edit.end);
  const Sentence& corrected = edit.replacement;

  if (letters_only(original) == letters_only(corrected)) return ErrorType::kOrth;

  if (original.size() == 1 && corrected.size() == 1) {
    if (lists.same_verb(original[0], corrected[0])) return ErrorType::kVerbForm;
    if (plural_pair(to_lower(original[0]), to_lower(corrected[0])))
      return ErrorType::kNounNum;
  }
  auto all_of = [](const Sentence& s, auto pred) {
    return std::all_of(s.begin(), s.end(), pred);
  };
  auto det = [&](const Token& t) { return lists.is_determiner(t); };
  if (all_of(original, det) && all_of(corrected, det)) return ErrorType::kDet;
  auto prep = [&](const Token& t) { return lists.is_preposition(t); };
  if (all_of(original, prep) && all_of(corrected, prep)) return ErrorType::kPrep;

  if (original.size() >= 2 && original != corrected) {
    Sentence a = original, b = corrected;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a == b) return ErrorType::kWordOrder;
  }
  return ErrorType::kOther;
}

EditScript extract_edits(const Sentence& source, const Sentence& target,
                         const WordLists& lists) {
  const std::size_t n = source.size(), m = target.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t diag = d[i - 1][j - 1] + (source[i - 1] == target[j - 1] ? 0 : 1);
      d[i][j] = std::min({diag, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  }

  enum class Op { kMatch, kSub, kDel, kIns };
  std::vector<Op> ops;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && source[i - 1] == target[j - 1] && d[i][j] == d[i - 1][j - 1]) {
      ops.push_back(Op::kMatch);
      --i, --j;
    } else if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + 1) {
      ops.push_back(Op::kSub);
      --i, --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ops.push_back(Op::kDel);
      --i;
    } else {
      ops.push_back(Op::kIns);
      --j;
    }
  }
  std::reverse(ops.begin(), ops.end());

  EditScript script;
  script.source = source;
  std::size_t si = 0, ti = 0;
  std::size_t k = 0;
  while (k < ops.size()) {
    if (ops[k] == Op::kMatch) {
      ++si, ++ti, ++k;
      continue;
    }
    Edit e;
    e.start = si;
    while (k < ops.size() && ops[k] != Op::kMatch) {
      if (ops[k] != Op::kIns) ++si;
      if (ops[k] != Op::kDel) e.replacement.push_back(target[ti++]);
      ++k;
    }
    e.end = si;
    e.type = classify_edit(e, source, lists);
    script.edits.push_back(std::move(e));
  }
  return script;
}

FScore f_beta(std::span<const EditScript> system, std::span<const EditScript> gold,
              double beta) {
  if (system.size() != gold.size()) {
    throw Error(ErrorKind::kLengthMismatch,
                std::to_string(system.size()) + " system vs " +
                    std::to_string(gold.size()) + " gold sentences");
  }
  if (!(beta > 0.0)) throw Error(ErrorKind::kInvalidArgument, "beta must be > 0");
  FScore s;
  for (std::size_t k = 0; k < system.size(); ++k) {
    const auto& sys = system[k].edits;
    const auto& ref = gold[k].edits;
    s.proposed += sys.size();
    s.gold += ref.size();
    for (const auto& e : sys) {
      if (std::any_of(ref.begin(), ref.end(),
                      [&](const Edit& g) { return g.same_correction(e); }))
        ++s.true_positives;
    }
  }
  const double tp = static_cast<double>(s.true_positives);
  s.precision = s.proposed ? tp / static_cast<double>(s.proposed) : 1.0;
  s.recall = s.gold ? tp / static_cast<double>(s.gold) : 1.0;
  const double b2 = beta * beta;
  const double denom = b2 * s.precision + s.recall;
  s.f = denom > 0.0 ? (1.0 + b2) * s.precision * s.recall / denom : 0.0;
  return s;
}

// ---------------------------------------------------------------- profile

void ErrorProfileBuilder::add(const PairRecord& record) {
  auto script = extract_edits(record.poor, record.good, lists_);
  ++profile_.pairs;
  profile_.poor_tokens += record.poor.size();
  for (const auto& e : script.edits) {
    profile_.edited_tokens += e.end - e.start;
    ++profile_.edits;
    ++profile_.per_type[e.type];
  }
}

ErrorProfile ErrorProfileBuilder::finish() const {
  if (profile_.pairs == 0) throw Error(ErrorKind::kEmptyInput, "no pairs to profile");
  ErrorProfile p = profile_;
  p.error_rate = p.poor_tokens
                     ? 100.0 * static_cast<double>(p.edited_tokens) /
                           static_cast<double>(p.poor_tokens)
                     : 0.0;
  std::size_t other = 0;
  if (auto it = p.per_type.find(ErrorType::kOther); it != p.per_type.end()) other = it->second;
  p.pct_in_rules = p.edits ? 100.0 * static_cast<double>(p.edits - other) /
                                 static_cast<double>(p.edits)
                           : 100.0;
  return p;
}

ErrorProfile error_stats(std::span<const PairRecord> pairs, const WordLists& lists) {
  ErrorProfileBuilder builder(lists);
  for (const auto& r : pairs) builder.add(r);
  return builder.finish();
}

// ---------------------------------------------------------------- M2

void write_m2(std::ostream& out, const EditScript& script) {
  out << "S " << detokenize(script.source) << '\n';
  for (const auto& e : script.edits) {
    out << "A " << e.start << ' ' << e.end << "|||" << error_type_name(e.type) << "|||"
        << detokenize(e.replacement) << "|||REQUIRED|||-NONE-|||0\n";
  }
  out << '\n';
}

std::vector<EditScript> read_m2(std::istream& in) {
  std::vector<EditScript> out;
  std::string line;
  bool open = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      open = false;
      continue;
    }
    if (line.rfind("S ", 0) == 0 || line == "S") {
      EditScript script;
      script.source = tokenize(line.size() > 2 ? line.substr(2) : "");
      out.push_back(std::move(script));
      open = true;
      continue;
    }
    if (line.rfind("A ", 0) != 0 || !open)
      throw Error(ErrorKind::kFormat, "unexpected M2 line: " + line);
    std::vector<std::string> fields;
    std::size_t start = 2;
    while (true) {
      auto pos = line.find("|||", start);
      fields.push_back(line.substr(start, pos == std::string::npos ? pos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 3;
    }
    if (fields.size() != 6) throw Error(ErrorKind::kFormat, "bad M2 edit line: " + line);
    std::istringstream span(fields[0]);
    long s = 0, e = 0;
    if (!(span >> s >> e)) throw Error(ErrorKind::kFormat, "bad M2 span: " + line);
    if (s < 0) continue;  // noop edit
    Edit edit;
    edit.start = static_cast<std::size_t>(s);
    edit.end = static_cast<std::size_t>(e);
    edit.type = parse_error_type(fields[1]);
    edit.replacement = fields[2] == "-NONE-" ? Sentence{} : tokenize(fields[2]);
    auto& script = out.back();
    if (edit.end < edit.start || edit.end > script.source.size())
      throw Error(ErrorKind::kFormat, "M2 span out of range: " + line);
    script.edits.push_back(std::move(edit));
  }
  return out;
}

}  // namespace pairforge
