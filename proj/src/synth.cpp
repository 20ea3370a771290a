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

#include "pairforge/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <random>

#include <json.hpp>

#include "pairforge/error.hpp"
#include "pairforge/lm.hpp"

namespace pairforge {

// ---------------------------------------------------------------- filtering

DropReport& DropReport::operator+=(const DropReport& o) {
  total += o.total;
  retained += o.retained;
  dropped += o.dropped;
  for (const auto& [g, c] : o.per_generator) {
    auto& mine = per_generator[g];
    mine.total += c.total;
    mine.retained += c.retained;
    mine.dropped += c.dropped;
  }
  return *this;
}

std::string DropReport::to_json() const {
  nlohmann::ordered_json j;
  j["total"] = total;
  j["retained"] = retained;
  j["dropped"] = dropped;
  j["per_generator"] = nlohmann::ordered_json::object();
  for (const auto& [g, c] : per_generator) {
    j["per_generator"][std::string(generator_name(g))] = {
        {"total", c.total}, {"retained", c.retained}, {"dropped", c.dropped}};
  }
  return j.dump(2) + "\n";
}

PairFilter::PairFilter(double threshold, bool enabled)
    : threshold_(threshold), enabled_(enabled) {
  if (!(threshold > 0.0))
    throw Error(ErrorKind::kInvalidArgument, "edit-rate threshold must be > 0");
}

bool PairFilter::accept(const PairRecord& record) {
  auto& per = report_.per_generator[record.generator];
  ++report_.total;
  ++per.total;
  if (enabled_ && record.edit_rate > threshold_) {
    ++report_.dropped;
    ++per.dropped;
    return false;
  }
  ++report_.retained;
  ++per.retained;
  return true;
}

DropReport filter_pairs(std::span<const PairRecord> records, double threshold,
                        const RecordSink& retained) {
  PairFilter filter(threshold);
  for (const auto& r : records)
    if (filter.accept(r) && retained) retained(r);
  return filter.report();
}

// ---------------------------------------------------------------- generation

namespace {

// Reads up to batch_size non-blank items; blank ones still consume an id.
template <typename Item, typename Stream, typename IsBlank, typename Fn>
void for_each_batch(const Stream& stream, const SynthesisOptions& options,
                    IsBlank is_blank, Fn&& fn) {
  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
  std::size_t next_id = options.first_id;
  std::size_t nonblank = 0;
  std::size_t consumed = 0;
  bool done = false;
  std::vector<Item> batch;
  std::vector<std::size_t> ids;
  while (!done) {
    batch.clear();
    ids.clear();
    while (batch.size() < batch_size) {
      if (options.limit && consumed >= options.limit) {
        done = true;
        break;
      }
      auto item = stream();
      if (!item) {
        done = true;
        break;
      }
      ++consumed;
      std::size_t id = next_id++;
      if (is_blank(*item)) continue;
      batch.push_back(std::move(*item));
      ids.push_back(id);
    }
    if (batch.empty()) break;
    fn(batch, ids, nonblank);
    nonblank += batch.size();
  }
}

}  // namespace

DropReport generate_records(
    const SentenceStream& sources,
    const std::function<PairRecord(const Sentence&, std::size_t)>& make,
    const SynthesisOptions& options, const RecordSink& sink) {
  PairFilter filter(options.threshold, options.filter);
  std::vector<PairRecord> records;
  for_each_batch<Sentence>(
      sources, options, [](const Sentence& s) { return s.empty(); },
      [&](const std::vector<Sentence>& batch, const std::vector<std::size_t>& ids,
          std::size_t) {
        records.assign(batch.size(), {});
        parallel_for(batch.size(), options.threads,
                     [&](std::size_t i) { records[i] = make(batch[i], ids[i]); });
        for (const auto& r : records)
          if (filter.accept(r) && sink) sink(r);
      });
  return filter.report();
}

DropReport generate_pairs(const SentenceStream& sources, const SmtSystem& beginner,
                          const GoodProvider& good, const SynthesisOptions& options,
                          const RecordSink& sink) {
  const Generator tag = std::holds_alternative<GoldReference>(good)
                            ? Generator::kSmtGold
                            : Generator::kSmtNmt;
  PairFilter filter(options.threshold, options.filter);
  for_each_batch<Sentence>(
      sources, options, [](const Sentence& s) { return s.empty(); },
      [&](const std::vector<Sentence>& batch, const std::vector<std::size_t>& ids,
          std::size_t offset) {
        auto poor = beginner.translate_batch(batch, options.threads);
        auto goods = good_sentences(good, batch, offset);
        for (std::size_t i = 0; i < batch.size(); ++i) {
          auto record = make_record(std::move(poor[i]), std::move(goods[i]), tag, ids[i]);
          if (filter.accept(record) && sink) sink(record);
        }
      });
  return filter.report();
}

DropReport generate_gold_pairs(const PairStream& pairs, const SmtSystem& beginner,
                               const SynthesisOptions& options, const RecordSink& sink) {
  PairFilter filter(options.threshold, options.filter);
  for_each_batch<SentencePair>(
      pairs, options,
      [](const SentencePair& p) { return p.source.empty() || p.target.empty(); },
      [&](std::vector<SentencePair>& batch, const std::vector<std::size_t>& ids,
          std::size_t) {
        auto corpus = std::make_shared<ParallelCorpus>();
        std::vector<Sentence> sources;
        sources.reserve(batch.size());
        for (const auto& p : batch) sources.push_back(p.source);
        corpus->pairs = std::move(batch);
        auto poor = beginner.translate_batch(sources, options.threads);
        auto goods = good_sentences(GoldReference{corpus}, sources, 0);
        for (std::size_t i = 0; i < sources.size(); ++i) {
          auto record = make_record(std::move(poor[i]), std::move(goods[i]),
                                    Generator::kSmtGold, ids[i]);
          if (filter.accept(record) && sink) sink(record);
        }
      });
  return filter.report();
}

// ---------------------------------------------------------------- corruption

std::string_view action_name(CorruptionAction a) {
  switch (a) {
    case CorruptionAction::kDelete: return "delete";
    case CorruptionAction::kDuplicate: return "duplicate";
    case CorruptionAction::kSwapAdjacent: return "swap-adjacent";
    case CorruptionAction::kInflectionSubstitute: return "inflection-substitute";
    case CorruptionAction::kDeterminerDrop: return "determiner-drop";
  }
  return "delete";
}

std::string_view match_name(TokenMatch m) {
  switch (m) {
    case TokenMatch::kAny: return "any";
    case TokenMatch::kWord: return "word";
    case TokenMatch::kDeterminer: return "determiner";
    case TokenMatch::kInflectable: return "inflectable";
  }
  return "any";
}

CorruptionRuleSet CorruptionRuleSet::defaults() {
  return {{
      {CorruptionAction::kDeterminerDrop, TokenMatch::kDeterminer, 0.15},
      {CorruptionAction::kInflectionSubstitute, TokenMatch::kInflectable, 0.15},
      {CorruptionAction::kSwapAdjacent, TokenMatch::kWord, 0.05},
      {CorruptionAction::kDuplicate, TokenMatch::kWord, 0.05},
      {CorruptionAction::kDelete, TokenMatch::kWord, 0.1},
  }};
}

void CorruptionRuleSet::validate() const {
  for (const auto& r : rules) {
    if (!(r.probability >= 0.0 && r.probability <= 1.0))
      throw Error(ErrorKind::kInvalidArgument, "rule probability outside [0, 1]");
  }
}

CorruptionRuleSet CorruptionRuleSet::from_json(const std::string& text) {
  CorruptionRuleSet set;
  try {
    auto j = nlohmann::json::parse(text);
    if (!j.is_array()) throw Error(ErrorKind::kConfigError, "corruption_rules must be an array");
    for (const auto& item : j) {
      CorruptionRule rule;
      bool has_action = false, has_match = false;
      for (const auto& [key, value] : item.items()) {
        if (key == "action") {
          auto name = value.get<std::string>();
          for (auto a : {CorruptionAction::kDelete, CorruptionAction::kDuplicate,
                         CorruptionAction::kSwapAdjacent,
                         CorruptionAction::kInflectionSubstitute,
                         CorruptionAction::kDeterminerDrop}) {
            if (action_name(a) == name) rule.action = a, has_action = true;
          }
          if (!has_action)
            throw Error(ErrorKind::kConfigError, "corruption_rules.action: unknown " + name);
        } else if (key == "match") {
          auto name = value.get<std::string>();
          for (auto m : {TokenMatch::kAny, TokenMatch::kWord, TokenMatch::kDeterminer,
                         TokenMatch::kInflectable}) {
            if (match_name(m) == name) rule.match = m, has_match = true;
          }
          if (!has_match)
            throw Error(ErrorKind::kConfigError, "corruption_rules.match: unknown " + name);
        } else if (key == "probability") {
          rule.probability = value.get<double>();
        } else {
          throw Error(ErrorKind::kConfigError, "corruption_rules." + key + ": unknown key");
        }
      }
      if (!has_action) throw Error(ErrorKind::kConfigError, "corruption_rules.action missing");
      if (!has_match) {
        rule.match = rule.action == CorruptionAction::kDeterminerDrop ? TokenMatch::kDeterminer
                     : rule.action == CorruptionAction::kInflectionSubstitute
                         ? TokenMatch::kInflectable
                         : TokenMatch::kWord;
      }
      set.rules.push_back(rule);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfigError, std::string("corruption_rules: ") + e.what());
  }
  try {
    set.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfigError, std::string("corruption_rules.probability: ") + e.what());
  }
  return set;
}

std::string CorruptionRuleSet::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : rules) {
    j.push_back({{"action", action_name(r.action)},
                 {"match", match_name(r.match)},
                 {"probability", r.probability}});
  }
  return j.dump(2);
}

std::uint64_t sentence_seed(std::uint64_t seed, std::size_t id) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (static_cast<std::uint64_t>(id) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

namespace {

bool is_alpha_word(const Token& t) {
  return !t.empty() && std::all_of(t.begin(), t.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || std::isalpha(u);
  });
}

bool is_lower_ascii_word(const Token& t) {
  return t.size() >= 3 && std::all_of(t.begin(), t.end(), [](char c) {
    return c >= 'a' && c <= 'z';
  });
}

// Inflectional alternatives that classify as VERB_FORM or NOUN_NUM.
std::vector<Token> inflections(const Token& token, const WordLists& lists) {
  std::vector<Token> out;
  if (!is_lower_ascii_word(token) || lists.is_determiner(token) ||
      lists.is_preposition(token))
    return out;
  for (const auto& form : lists.verb_forms(token)) {
    if (form != token && lists.same_verb(token, form)) out.push_back(form);
  }
  if (!out.empty()) return out;
  const char last = token.back();
  auto ends = [&](std::string_view s) {
    return token.size() > s.size() && token.compare(token.size() - s.size(), s.size(), s) == 0;
  };
  if (last == 's' && !ends("ss")) {
    out.push_back(token.substr(0, token.size() - 1));
  } else if (last == 'y' && std::string_view("aeiou").find(token[token.size() - 2]) ==
                                std::string_view::npos) {
    out.push_back(token.substr(0, token.size() - 1) + "ies");
  } else if (last == 's' || last == 'x' || last == 'z' || ends("ch") || ends("sh")) {
    out.push_back(token + "es");
  } else {
    out.push_back(token + "s");
  }
  return out;
}

class SeededUniform {
 public:
  explicit SeededUniform(std::uint64_t seed) : rng_(seed) {}
  double next() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

PairRecord corrupt(const Sentence& sentence, const CorruptionRuleSet& rules,
                   std::uint64_t seed, std::size_t source_id, const WordLists& lists) {
  if (sentence.empty()) throw Error(ErrorKind::kEmptySource, "cannot corrupt an empty sentence");
  rules.validate();
  SeededUniform rng(seed);
  Sentence tokens = sentence;
  std::vector<char> locked(tokens.size(), 0);
  auto lock = [&](long from, long to) {
    for (long i = std::max(0L, from); i <= to && i < static_cast<long>(locked.size()); ++i)
      locked[i] = 1;
  };

  for (const auto& rule : rules.rules) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (locked[i]) continue;
      const Token& tok = tokens[i];
      bool matches = false;
      switch (rule.match) {
        case TokenMatch::kAny: matches = true; break;
        case TokenMatch::kWord: matches = is_alpha_word(tok); break;
        case TokenMatch::kDeterminer: matches = lists.is_determiner(tok); break;
        case TokenMatch::kInflectable: matches = !inflections(tok, lists).empty(); break;
      }
      if (!matches) continue;
      const long li = static_cast<long>(i);
      switch (rule.action) {
        case CorruptionAction::kDelete:
        case CorruptionAction::kDeterminerDrop: {
          if (tokens.size() <= 1) break;
          if (rule.action == CorruptionAction::kDeterminerDrop && !lists.is_determiner(tok)) break;
          if (rng.next() >= rule.probability) break;
          tokens.erase(tokens.begin() + li);
          locked.erase(locked.begin() + li);
          lock(li - 2, li + 1);
          break;
        }
        case CorruptionAction::kDuplicate: {
          if (rng.next() >= rule.probability) break;
          tokens.insert(tokens.begin() + li + 1, tok);
          locked.insert(locked.begin() + li + 1, 1);
          lock(li - 2, li + 3);
          ++i;
          break;
        }
        case CorruptionAction::kSwapAdjacent: {
          if (i + 1 >= tokens.size() || locked[i + 1]) break;
          if (tokens[i + 1] == tok) break;
          if (rule.match != TokenMatch::kAny && !is_alpha_word(tokens[i + 1])) break;
          if (rng.next() >= rule.probability) break;
          std::swap(tokens[i], tokens[i + 1]);
          lock(li - 2, li + 3);
          ++i;
          break;
        }
        case CorruptionAction::kInflectionSubstitute: {
          auto options = inflections(tok, lists);
          if (options.empty()) break;
          if (rng.next() >= rule.probability) break;
          tokens[i] = options[rng.index(options.size())];
          lock(li - 2, li + 2);
          break;
        }
      }
    }
  }
  return make_record(std::move(tokens), sentence, Generator::kCorruption, source_id);
}

// ---------------------------------------------------------------- round trip

PairRecord roundtrip(const Sentence& sentence, const SmtSystem& fwd, const SmtSystem& rev,
                     std::size_t source_id) {
  Sentence bridge = fwd.translate(sentence).target;
  Sentence back = rev.translate(bridge).target;
  return make_record(std::move(back), sentence, Generator::kRoundTrip, source_id);
}

// ---------------------------------------------------------------- training

TrainedSystem train_system(const ParallelCorpus& corpus, const SmtTrainingConfig& config) {
  if (corpus.empty()) throw Error(ErrorKind::kEmptyCorpus, "no training pairs");
  auto aligned = align_corpus(corpus, config.em_iterations);
  auto phrases = std::make_shared<PhraseTable>(build_phrase_table(
      corpus, aligned.alignments, config.max_phrase_len, aligned.forward, aligned.reverse));
  std::vector<Sentence> targets;
  targets.reserve(corpus.size());
  for (const auto& p : corpus.pairs) targets.push_back(p.target);
  auto lm = std::make_shared<NGramModel>(train_lm(targets, config.lm_order));

  TrainedSystem out;
  SmtSystem system(phrases, lm, config.init, config.decode);
  if (config.tune) {
    auto dev = sample_dev(corpus, config.dev_size, config.mert.seed);
    out.tuning = mert_tune(dev, system, config.init, config.mert);
    system = system.with_weights(out.tuning->weights);
  }
  out.system = std::make_shared<SmtSystem>(std::move(system));
  return out;
}

std::shared_ptr<const SmtSystem> train_error_generator(const ParallelCorpus& seed_pairs,
                                                       const SmtTrainingConfig& config) {
  if (seed_pairs.empty()) throw Error(ErrorKind::kEmptyCorpus, "no seed pairs");
  return train_system(seed_pairs, config).system;
}

PairRecord back_translate(const Sentence& sentence, const SmtSystem& generator,
                          std::size_t source_id) {
  Sentence noisy = generator.translate(sentence).target;
  return make_record(std::move(noisy), sentence, Generator::kBackTranslation, source_id);
}

// ---------------------------------------------------------------- output

std::string format_tsv_line(const PairRecord& r) {
  char rate[32];
  std::snprintf(rate, sizeof rate, "%.6f", r.edit_rate);
  return detokenize(r.poor) + '\t' + detokenize(r.good) + '\t' +
         std::string(generator_name(r.generator)) + '\t' + rate;
}

PairRecord parse_tsv_line(const std::string& line, std::size_t source_id) {
  auto fields = split_tabs(line);
  if (fields.size() < 2) throw Error(ErrorKind::kFormat, "pair line needs poor TAB good: " + line);
  PairRecord r;
  r.poor = tokenize(normalize_nfc(fields[0]));
  r.good = tokenize(normalize_nfc(fields[1]));
  r.generator = fields.size() > 2 ? parse_generator(fields[2]) : Generator::kSmtGold;
  r.edit_rate = fields.size() > 3 ? parse_real(fields[3], "edit rate")
                : r.poor.empty()  ? 0.0
                                  : edit_rate(r.poor, r.good);
  r.source_id = source_id;
  return r;
}

std::vector<PairRecord> read_pairs_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<PairRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back(parse_tsv_line(line, out.size()));
  }
  return out;
}

ParallelCorpus read_tsv_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  ParallelCorpus corpus;
  corpus.name = path.stem().string();
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_tabs(line);
    if (fields.size() < 2) {
      if (line.empty()) {
        ++corpus.dropped;
        continue;
      }
      throw Error(ErrorKind::kFormat, "pair line needs poor TAB good: " + line);
    }
    SentencePair p{tokenize(normalize_nfc(fields[0])), tokenize(normalize_nfc(fields[1]))};
    if (p.source.empty() || p.target.empty()) {
      ++corpus.dropped;
      continue;
    }
    corpus.pairs.push_back(std::move(p));
  }
  return corpus;
}

PairWriter::PairWriter(const std::filesystem::path& dir, const std::string& prefix)
    : dir_(dir), prefix_(prefix) {
  std::filesystem::create_directories(dir);
  tsv_.open(dir / (prefix + ".tsv"));
  m2_.open(dir / (prefix + ".m2"));
  poor_.open(dir / (prefix + ".poor.txt"));
  good_.open(dir / (prefix + ".good.txt"));
  if (!tsv_ || !m2_ || !poor_ || !good_)
    throw Error(ErrorKind::kIo, "cannot write pair files under " + dir.string());
}

void PairWriter::write(const PairRecord& r) {
  tsv_ << format_tsv_line(r) << '\n';
  write_m2(m2_, extract_edits(r.poor, r.good));
  poor_ << detokenize(r.poor) << '\n';
  good_ << detokenize(r.good) << '\n';
}

void PairWriter::close() {
  tsv_.close();
  m2_.close();
  poor_.close();
  good_.close();
}

std::vector<std::filesystem::path> PairWriter::paths() const {
  return {dir_ / (prefix_ + ".tsv"), dir_ / (prefix_ + ".m2"),
          dir_ / (prefix_ + ".poor.txt"), dir_ / (prefix_ + ".good.txt")};
}

}  // namespace pairforge
