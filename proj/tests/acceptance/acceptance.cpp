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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <malloc.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <new>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "pairforge/align.hpp"
#include "pairforge/decode.hpp"
#include "pairforge/lm.hpp"
#include "pairforge/mert.hpp"
#include "pairforge/metrics.hpp"
#include "pairforge/pipeline.hpp"
#include "pairforge/synth.hpp"
#include "pairforge/textcore.hpp"
#include "pairforge/toydata.hpp"
#include "support.hpp"

// ------------------------------------------------------------ heap accounting

namespace {

std::atomic<std::size_t> g_live{0};
std::atomic<std::size_t> g_peak{0};

void note_alloc(std::size_t n) {
  std::size_t now = g_live.fetch_add(n, std::memory_order_relaxed) + n;
  std::size_t peak = g_peak.load(std::memory_order_relaxed);
  while (now > peak && !g_peak.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
  }
}

}  // namespace

void* operator new(std::size_t n) {
  void* p = std::malloc(n ? n : 1);
  if (!p) throw std::bad_alloc();
  note_alloc(malloc_usable_size(p));
  return p;
}

void operator delete(void* p) noexcept {
  if (!p) return;
  g_live.fetch_sub(malloc_usable_size(p), std::memory_order_relaxed);
  std::free(p);
}

void operator delete(void* p, std::size_t) noexcept { ::operator delete(p); }

namespace {

using namespace pairforge;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// Tolerances and limits.
constexpr double kLmScale = 0.8;
constexpr double kDegradationSeconds = 300.0;
constexpr double kMertSeconds = 120.0;
constexpr double kMertTolerance = 1e-9;
constexpr std::size_t kOracleCases = 100;
constexpr int kEmIterations = 10;
constexpr double kEmTarget = 0.9;
constexpr double kLikelihoodTolerance = 1e-12;
constexpr double kF05Expected = 0.833333;
constexpr double kF05Tolerance = 1e-6;
constexpr double kEditRateThreshold = 0.6;
constexpr std::size_t kStreamingSmall = 10000;
constexpr std::size_t kStreamingLarge = 100000;
constexpr double kStreamingRatio = 1.2;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

struct Verdict {
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void note(const std::string& text) { notes.push_back(text); }
};

int run_step(Command c, const PipelineConfig& config, const CommandArgs& args = {}) {
  std::ostringstream log, err;
  int code = run(c, config, args, log, err);
  if (code != 0) {
    throw std::runtime_error(std::string(command_name(c)) + " exited " + std::to_string(code) +
                             ": " + err.str());
  }
  return code;
}

nlohmann::json read_json(const fs::path& path) {
  return nlohmann::json::parse(testing::slurp(path));
}

// Token-level Levenshtein distance.
std::size_t levenshtein(const Sentence& a, const Sentence& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

// ------------------------------------------------------------ shared toy setup

// A 5k-pair toy corpus, trained and tuned through the pipeline commands, plus
// monolingual files for the streaming runs.
class TunedToy {
 public:
  TunedToy() {
    ToyDataset data = toy_dataset(5000, 300, 300, kStreamingLarge, 20240917);
    write_toy_dataset(dir_.path(), data);
    std::vector<Sentence> small(data.monolingual.begin(),
                                data.monolingual.begin() + kStreamingSmall);
    write_sentences(dir_ / "mono-small.src", small);
    config_ = PipelineConfig::from_json(R"({
      "paths": {"parallel_source": "train.src", "parallel_target": "train.tgt",
                "dev_source": "dev.src", "dev_target": "dev.tgt",
                "monolingual_source": "mono.src", "output_dir": "out"},
      "mix": {"smt_gold": 0, "smt_nmt": 1}
    })", dir_.path());
  }

  void train_and_tune() {
    for (Command c : {Command::kTrainLm, Command::kAlign, Command::kPhrases, Command::kTune})
      run_step(c, config_);
    phrases_ = std::make_shared<PhraseTable>(PhraseTable::read(out(artifact::kPhraseTable)));
    lm_ = std::make_shared<NGramModel>(NGramModel::read_arpa(out(artifact::kLm)));
    weights_ = read_weights(out(artifact::kWeights));
    trained_ = true;
  }

  bool trained() const { return trained_; }
  fs::path path(const std::string& name) const { return dir_ / name; }
  fs::path out(const std::string& name) const { return config_.paths.output_dir / name; }
  const PipelineConfig& config() const { return config_; }

  SmtSystem system(const LogLinearWeights& w) const {
    DecodeParams params{config_.beam_size, config_.distortion_limit};
    return SmtSystem(phrases_, lm_, w, params);
  }
  const LogLinearWeights& tuned_weights() const { return weights_; }
  const NGramModel& lm() const { return *lm_; }

 private:
  testing::TempDir dir_{"acceptance-toy"};
  PipelineConfig config_;
  std::shared_ptr<const PhraseTable> phrases_;
  std::shared_ptr<const NGramModel> lm_;
  LogLinearWeights weights_;
  bool trained_ = false;
};

TunedToy& toy() {
  static TunedToy instance;
  return instance;
}

// ------------------------------------------------------------ criteria

Verdict degradation_direction() {
  Verdict v;
  auto start = Clock::now();
  TunedToy& t = toy();
  t.train_and_tune();
  auto test = load_parallel(t.path("test.src"), t.path("test.tgt"));
  std::vector<Sentence> sources, refs;
  for (const auto& p : test.pairs) {
    sources.push_back(p.source);
    refs.push_back(p.target);
  }
  SmtSystem tuned = t.system(t.tuned_weights());
  SmtSystem beginner = t.system(scale_lm_weight(t.tuned_weights(), kLmScale));
  auto good = tuned.translate_batch(sources);
  auto poor = beginner.translate_batch(sources);
  const double elapsed = seconds_since(start);

  const double bleu_tuned = bleu(refs, good), bleu_beginner = bleu(refs, poor);
  const double ppl_tuned = perplexity(t.lm(), good), ppl_beginner = perplexity(t.lm(), poor);
  const bool identical = good == poor;
  v.note("tuned BLEU " + fmt("%.2f", bleu_tuned) + " ppl " + fmt("%.2f", ppl_tuned));
  v.note("lm x0.8 BLEU " + fmt("%.2f", bleu_beginner) + " ppl " + fmt("%.2f", ppl_beginner));
  v.note(fmt("%.1f s", elapsed));
  if (identical) {
    v.note("outputs identical");
  } else {
    v.require(bleu_beginner < bleu_tuned, "BLEU did not drop");
    v.require(ppl_beginner > ppl_tuned, "perplexity did not rise");
  }
  v.require(elapsed < kDegradationSeconds, "runtime over 5 min");
  return v;
}

Verdict mert_monotonicity() {
  Verdict v;
  TunedToy& t = toy();
  if (!t.trained()) t.train_and_tune();
  auto dev = load_parallel(t.path("dev.src"), t.path("dev.tgt"));
  testing::Gen g(424242);
  LogLinearWeights init;
  init.lm = g.unit();
  for (auto& p : init.phrase) p = g.uniform(-1, 1);
  init.word_penalty = g.uniform(-1, 1);
  init.distortion = g.uniform(-1, 1);

  auto start = Clock::now();
  MertConfig cfg;
  cfg.seed = 11;
  MertState st = mert_tune(dev, t.system(init), init, cfg);
  const double elapsed = seconds_since(start);

  v.require(!st.dev_bleu_history.empty() &&
                st.dev_bleu_history.size() == st.dev_bleu_before.size(),
            "missing iteration history");
  std::string history;
  for (std::size_t i = 0; i < st.dev_bleu_history.size(); ++i) {
    history += (i ? " " : "") + fmt("%.2f", st.dev_bleu_history[i]);
    v.require(st.dev_bleu_history[i] >= st.dev_bleu_before[i] - kMertTolerance,
              "pooled BLEU dropped at iteration " + std::to_string(i + 1));
  }
  const double final_bleu = st.pool.bleu(st.weights.as_vector());
  const double init_bleu = st.pool.bleu(init.as_vector());
  v.require(final_bleu >= init_bleu - kMertTolerance, "final BLEU below random init");
  v.require(elapsed < kMertSeconds, "runtime over 2 min");
  v.note("history " + history);
  v.note("init " + fmt("%.2f", init_bleu) + " -> final " + fmt("%.2f", final_bleu) +
         " on the final pool");
  v.note(fmt("%.1f s", elapsed));
  return v;
}

Verdict exact_search_oracle() {
  Verdict v;
  testing::Gen g(31337);
  const std::vector<std::string> src_vocab = {"a", "b", "c", "d", "e"};
  const std::vector<std::string> tgt_vocab = {"u", "v", "w", "x", "y", "z"};
  auto features = [&g] {
    return std::array<double, 4>{g.uniform(0.05, 1), g.uniform(0.05, 1), g.uniform(0.05, 1),
                                 g.uniform(0.05, 1)};
  };
  PhraseTable pt(3);
  for (const auto& w : src_vocab) {
    if (w == "e") continue;  // copied through
    for (int k = 0; k < 2; ++k) pt.add({{w}, g.sentence(1, 2, tgt_vocab), features()});
  }
  for (int k = 0; k < 8; ++k)
    pt.add({g.sentence(2, 3, src_vocab), g.sentence(1, 3, tgt_vocab), features()});
  std::vector<Sentence> corpus;
  for (int k = 0; k < 40; ++k) corpus.push_back(g.sentence(2, 6, tgt_vocab));
  const NGramModel lm = train_lm(corpus, 3);

  std::size_t matches = 0;
  for (std::size_t c = 0; c < kOracleCases; ++c) {
    LogLinearWeights w;
    w.lm = g.uniform(0, 1);
    for (auto& p : w.phrase) p = g.uniform(-0.2, 1);
    w.word_penalty = g.uniform(-1, 1);
    w.distortion = g.uniform(-0.2, 1);
    Sentence src = g.sentence(1, 4, src_vocab);
    DecodeParams params{1000000, g.between(0, 3)};
    testing::ExhaustiveDecoder oracle(pt, lm, w, src, params.distortion_limit);
    Translation got = decode(pt, lm, w, src, params);
    if (oracle.found() && detokenize(got.target) == oracle.text()) {
      ++matches;
    } else {
      v.require(false, "mismatch on '" + detokenize(src) + "'");
    }
  }
  v.note(std::to_string(matches) + "/" + std::to_string(kOracleCases) + " exact matches");
  return v;
}

// Hand-rolled Model 1 EM with a NULL source word.
struct HandEm {
  std::map<std::pair<std::string, std::string>, double> t;  // (source, target)
  std::vector<double> log_likelihood;

  explicit HandEm(const ParallelCorpus& corpus, int iterations) {
    std::set<std::string> targets;
    for (const auto& p : corpus.pairs) targets.insert(p.target.begin(), p.target.end());
    auto with_null = [](const Sentence& s) {
      Sentence out{"NULL"};
      out.insert(out.end(), s.begin(), s.end());
      return out;
    };
    for (const auto& p : corpus.pairs)
      for (const auto& f : with_null(p.source))
        for (const auto& e : p.target) t[{f, e}] = 1.0 / static_cast<double>(targets.size());
    auto likelihood = [&] {
      double ll = 0.0;
      for (const auto& p : corpus.pairs) {
        Sentence src = with_null(p.source);
        for (const auto& e : p.target) {
          double sum = 0.0;
          for (const auto& f : src) sum += t[{f, e}];
          ll += std::log(sum / static_cast<double>(src.size()));
        }
      }
      return ll;
    };
    log_likelihood.push_back(likelihood());
    for (int it = 0; it < iterations; ++it) {
      std::map<std::pair<std::string, std::string>, double> count;
      std::map<std::string, double> total;
      for (const auto& p : corpus.pairs) {
        Sentence src = with_null(p.source);
        for (const auto& e : p.target) {
          double z = 0.0;
          for (const auto& f : src) z += t[{f, e}];
          for (const auto& f : src) {
            count[{f, e}] += t[{f, e}] / z;
            total[f] += t[{f, e}] / z;
          }
        }
      }
      for (auto& [key, value] : t) value = count[key] / total[key.first];
      log_likelihood.push_back(likelihood());
    }
  }
};

Verdict em_oracle() {
  Verdict v;
  ParallelCorpus corpus;
  corpus.pairs = {{testing::words("la maison"), testing::words("the house")},
                  {testing::words("la"), testing::words("the")}};
  std::vector<double> ll;
  TranslationTable table = em_model1(corpus, kEmIterations, &ll);
  HandEm hand(corpus, kEmIterations);

  int reached = -1;
  for (int it = 1; it <= kEmIterations && reached < 0; ++it)
    if (em_model1(corpus, it)("la", "the") > kEmTarget) reached = it;
  v.require(reached > 0, "t(the|la) stayed at or below 0.9");
  v.require(ll.size() == static_cast<std::size_t>(kEmIterations) + 1, "likelihood trace length");
  for (std::size_t i = 1; i < ll.size(); ++i)
    v.require(ll[i] >= ll[i - 1] - kLikelihoodTolerance,
              "likelihood fell at iteration " + std::to_string(i));
  for (const auto& [key, value] : hand.t)
    v.require(std::abs(table(key.first, key.second) - value) < 1e-12,
              "t(" + key.second + "|" + key.first + ") differs from hand EM");
  for (std::size_t i = 0; i < ll.size() && i < hand.log_likelihood.size(); ++i)
    v.require(std::abs(ll[i] - hand.log_likelihood[i]) < 1e-9, "likelihood differs from hand EM");
  v.note("t(the|la) = " + fmt("%.6f", table("la", "the")) + " after " +
         std::to_string(kEmIterations) + " iterations");
  v.note("first above 0.9 at iteration " + std::to_string(reached));
  return v;
}

Verdict bleu_oracle() {
  Verdict v;
  std::vector<Sentence> refs = {testing::words("the big dog sleeps on the mat ."),
                                testing::words("a small cat eats the old fish ."),
                                testing::words("three birds sing in the green tree .")};
  const double identity = bleu(refs, refs);
  v.require(identity == 100.0, "identity BLEU " + fmt("%.17g", identity));
  BleuStats st = bleu_stats(testing::words("the cat"), testing::words("the the the"));
  v.require(st.matches[0] == 1.0 && st.totals[0] == 3.0, "clipped unigram counts");
  v.require(st.precision(1) == 1.0 / 3.0, "p1 " + fmt("%.17g", st.precision(1)));
  v.note("identity " + fmt("%.1f", identity) + ", p1 " + fmt("%.6f", st.precision(1)));
  return v;
}

Verdict f05_oracle() {
  Verdict v;
  const Sentence src = testing::words("he go to school on monday");
  auto script = [&](std::vector<Edit> edits) {
    EditScript s;
    s.source = src;
    s.edits = std::move(edits);
    return s;
  };
  const Edit verb{1, 2, {"goes"}, ErrorType::kVerbForm};
  const Edit prep{4, 5, {"on"}, ErrorType::kPrep};
  std::vector<EditScript> gold = {script({verb, prep})};

  auto formula = [](double p, double r, double beta) {
    double b2 = beta * beta;
    return (b2 * p + r) > 0 ? (1 + b2) * p * r / (b2 * p + r) : 0.0;
  };

  FScore perfect = f_beta(gold, gold, 0.5);
  v.require(perfect.f == 1.0, "perfect system F0.5 " + fmt("%.6f", perfect.f));

  std::vector<EditScript> empty = {script({})};
  FScore none = f_beta(empty, gold, 0.5);
  v.require(none.precision == 1.0 && none.recall == 0.0 && none.f == 0.0,
            "empty system gives P " + fmt("%.3f", none.precision) + " R " +
                fmt("%.3f", none.recall) + " F " + fmt("%.3f", none.f));

  std::vector<EditScript> half = {script({verb})};
  FScore partial = f_beta(half, gold, 0.5);
  v.require(partial.precision == 1.0 && partial.recall == 0.5, "partial system P/R");
  v.require(std::abs(partial.f - kF05Expected) <= kF05Tolerance,
            "partial F0.5 " + fmt("%.6f", partial.f));
  v.require(std::abs(partial.f - formula(1.0, 0.5, 0.5)) <= 1e-12, "formula disagreement");
  v.note("perfect 1.0, empty (1, 0, 0), partial " + fmt("%.6f", partial.f));
  return v;
}

// Toy corpora for the full pipeline runs.
struct PipelineToy {
  testing::TempDir dir{"acceptance-pipeline"};

  PipelineToy() {
    ToyDataset data = toy_dataset(1500, 150, 100, 600, 99);
    write_toy_dataset(dir.path(), data);
    std::ostringstream seed;
    for (std::size_t i = 0; i < 120; ++i) {
      const Sentence& good = data.english[i % data.english.size()];
      Sentence poor = good;
      if (poor.size() > 2 && (poor[0] == "the" || poor[0] == "a")) poor.erase(poor.begin());
      seed << detokenize(poor) << '\t' << detokenize(good) << '\n';
    }
    dir.write("seed.tsv", seed.str());
  }

  PipelineConfig config(const std::string& out) const {
    return PipelineConfig::from_json(R"({
      "paths": {"parallel_source": "train.src", "parallel_target": "train.tgt",
                "monolingual_source": "mono.src", "dev_source": "dev.src",
                "dev_target": "dev.tgt", "english_text": "english.txt",
                "seed_gec": "seed.tsv", "output_dir": ")" + out + R"("},
      "edit_rate_threshold": 0.6,
      "mert": {"outer_iters": 4},
      "mix": {"smt_gold": 0.3, "smt_nmt": 0.3, "corruption": 0.2,
              "back_translation": 0.1, "round_trip": 0.1},
      "max_pairs": 2000
    })", dir.path());
  }

  // Every command in order.
  void run_all(const PipelineConfig& c) const {
    for (Command cmd : {Command::kTrainLm, Command::kAlign, Command::kPhrases, Command::kTune,
                        Command::kSynthesize, Command::kProfile})
      run_step(cmd, c);
    CommandArgs decode;
    decode.input = dir / "test.src";
    run_step(Command::kDecode, c, decode);
    CommandArgs evaluate;
    evaluate.hyp = c.paths.output_dir / artifact::kDecoded;
    evaluate.ref = dir / "test.tgt";
    evaluate.src = dir / "test.src";
    run_step(Command::kEvaluate, c, evaluate);
  }
};

PipelineToy& pipeline_toy() {
  static PipelineToy instance;
  return instance;
}

std::size_t count_nonempty_lines(const fs::path& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

Verdict filter_soundness() {
  Verdict v;
  PipelineToy& p = pipeline_toy();
  PipelineConfig c = p.config("run-a");
  p.run_all(c);
  const fs::path out = c.paths.output_dir;

  std::map<std::string, std::size_t> lines_by_tag;
  std::size_t lines = 0, over = 0, stored_over = 0;
  std::ifstream in(out / "pairs.tsv");
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    ++lines;
    auto fields = split_tabs(line);
    if (fields.size() != 4) {
      v.require(false, "malformed line: " + line);
      continue;
    }
    Sentence poor = tokenize(fields[0]), good = tokenize(fields[1]);
    double rate = poor.empty() ? 0.0
                               : static_cast<double>(levenshtein(poor, good)) /
                                     static_cast<double>(poor.size());
    over += rate > kEditRateThreshold;
    stored_over += std::stod(fields[3]) > kEditRateThreshold;
    ++lines_by_tag[fields[2]];
  }
  v.require(over == 0, std::to_string(over) + " retained records above 0.6");
  v.require(stored_over == 0, std::to_string(stored_over) + " stored rates above 0.6");

  auto report = read_json(out / artifact::kSynthReport);
  const std::size_t total = report["total"], retained = report["retained"],
                    dropped = report["dropped"];
  v.require(retained == lines, "retained count differs from pairs.tsv");
  v.require(total == retained + dropped, "total != retained + dropped");
  v.require(count_nonempty_lines(out / "pairs.poor.txt") == retained &&
                count_nonempty_lines(out / "pairs.good.txt") == retained,
            "poor/good files disagree with the report");
  std::size_t sum_total = 0, sum_retained = 0, sum_dropped = 0;
  const std::map<std::string, std::size_t> quota = {{"SMT_GOLD", 600}, {"SMT_NMT", 600},
                                                    {"CORRUPTION", 400}, {"BACK_TRANSLATION", 200},
                                                    {"ROUND_TRIP", 200}};
  for (const auto& [tag, counts] : report["per_generator"].items()) {
    const std::size_t t = counts["total"], r = counts["retained"], d = counts["dropped"];
    sum_total += t;
    sum_retained += r;
    sum_dropped += d;
    v.require(t == r + d, tag + ": total != retained + dropped");
    v.require(lines_by_tag[tag] == r, tag + ": retained differs from pairs.tsv");
    if (auto it = quota.find(tag); it != quota.end())
      v.require(t == it->second, tag + ": consumed " + std::to_string(t) + " sources");
  }
  v.require(report["per_generator"].size() == quota.size(), "expected five generators");
  v.require(sum_total == total && sum_retained == retained && sum_dropped == dropped,
            "per-generator counts do not sum to the totals");
  v.note(std::to_string(total) + " generated, " + std::to_string(retained) + " retained, " +
         std::to_string(dropped) + " dropped, 0 over threshold");
  return v;
}

// One pair with its hand-enumerated edits.
struct HandPair {
  std::string poor;
  std::string good;
  std::size_t edited_tokens;  // poor-side tokens inside edits
  std::size_t edits;
  std::size_t other;  // edits outside every rule
};

Verdict error_profile() {
  Verdict v;
  testing::TempDir dir("acceptance-profile");
  const std::vector<std::string> nouns = {"cat", "dog", "bird", "horse", "cow"};
  // {N} is replaced by each noun in turn.
  const std::vector<HandPair> templates = {
      {"{N} sleeps on the mat .", "the {N} sleeps on the mat .", 0, 1, 0},  // missing
      {"the the {N} sleeps .", "the {N} sleeps .", 1, 1, 0},                // unnecessary
      {"the {N} sleep .", "the {N} sleeps .", 1, 1, 0},                     // verb form
      {"the {N}s sleeps .", "the {N} sleeps .", 1, 1, 0},                   // noun number
      {"a {N} sleeps .", "the {N} sleeps .", 1, 1, 0},                      // determiner
      {"the {N} sleeps in the box .", "the {N} sleeps on the box .", 1, 1, 0},  // preposition
      {"The {N} sleeps .", "the {N} sleeps .", 1, 1, 0},                    // orthography
      {"{N} the sleeps .", "the {N} sleeps .", 2, 1, 0},                    // word order
      {"the {N} sleeps .", "the {N} runs .", 1, 1, 1},                      // other
      {"{N} sleep .", "the {N} sleeps .", 1, 2, 0},                         // missing + verb
  };
  auto fill = [](std::string text, const std::string& noun) {
    for (std::size_t at; (at = text.find("{N}")) != std::string::npos;) text.replace(at, 3, noun);
    return text;
  };
  std::ostringstream tsv;
  std::size_t poor_tokens = 0, edited = 0, edits = 0, other = 0, pairs = 0;
  for (const auto& noun : nouns) {
    for (const auto& t : templates) {
      std::string poor = fill(t.poor, noun);
      tsv << poor << '\t' << fill(t.good, noun) << "\tSMT_GOLD\n";
      poor_tokens += static_cast<std::size_t>(std::count(poor.begin(), poor.end(), ' ')) + 1;
      edited += t.edited_tokens;
      edits += t.edits;
      other += t.other;
      ++pairs;
    }
  }
  const double want_rate = 100.0 * static_cast<double>(edited) / static_cast<double>(poor_tokens);
  const double want_rules =
      100.0 * static_cast<double>(edits - other) / static_cast<double>(edits);

  PipelineConfig c = PipelineConfig::from_json(R"({"paths": {"output_dir": "out"}})", dir.path());
  CommandArgs args;
  args.pairs = dir.write("hand.tsv", tsv.str());
  run_step(Command::kProfile, c, args);
  auto profile = read_json(c.paths.output_dir / artifact::kProfile);
  v.require(profile["pairs"] == pairs, "pair count");
  v.require(profile["poor_tokens"] == poor_tokens, "poor token count");
  v.require(profile["edited_tokens"] == edited,
            "edited tokens " + profile["edited_tokens"].dump() + " vs " + std::to_string(edited));
  v.require(profile["edits"] == edits,
            "edits " + profile["edits"].dump() + " vs " + std::to_string(edits));
  v.require(profile["error_rate"].get<double>() == want_rate,
            "error_rate " + profile["error_rate"].dump());
  v.require(profile["pct_in_rules"].get<double>() == want_rules,
            "pct_in_rules " + profile["pct_in_rules"].dump());
  v.note("50 hand pairs: error_rate " + fmt("%.4f", want_rate) + ", pct_in_rules " +
         fmt("%.4f", want_rules));

  // Corruption output, profiled through the same command.
  ToyDataset data = toy_dataset(0, 0, 0, 5000, 123);
  const CorruptionRuleSet rules = CorruptionRuleSet::defaults();
  std::ostringstream corrupted;
  std::size_t with_edits = 0;
  for (std::size_t i = 0; i < data.english.size(); ++i) {
    PairRecord r = corrupt(data.english[i], rules, sentence_seed(5, i), i);
    if (r.poor.empty()) continue;
    with_edits += r.poor != r.good;
    corrupted << format_tsv_line(r) << '\n';
  }
  args.pairs = dir.write("corrupt.tsv", corrupted.str());
  run_step(Command::kProfile, c, args);
  auto cp = read_json(c.paths.output_dir / artifact::kProfile);
  v.require(cp["pct_in_rules"].get<double>() == 100.0,
            "corruption pct_in_rules " + cp["pct_in_rules"].dump());
  v.note("corruption pct_in_rules " + cp["pct_in_rules"].dump() + " over " +
         cp["edits"].dump() + " edits in " + std::to_string(with_edits) + " changed pairs");

  // The corruption share of the full pipeline run, when present.
  const fs::path run_profile = pipeline_toy().dir / "run-a" / artifact::kProfile;
  if (fs::exists(run_profile)) {
    auto rp = read_json(run_profile);
    if (rp["per_generator"].contains("CORRUPTION")) {
      const double pct = rp["per_generator"]["CORRUPTION"]["pct_in_rules"];
      v.require(pct == 100.0, "pipeline corruption pct_in_rules " + fmt("%.4f", pct));
    }
  }
  return v;
}

Verdict determinism() {
  Verdict v;
  PipelineToy& p = pipeline_toy();
  PipelineConfig a = p.config("run-a");
  if (!fs::exists(a.paths.output_dir / artifact::kEvaluation)) p.run_all(a);
  PipelineConfig b = p.config("run-b");
  p.run_all(b);

  auto checksums = [](const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(root))
      if (e.is_regular_file()) out[e.path().filename().string()] = sha256_file(e.path());
    return out;
  };
  auto ca = checksums(a.paths.output_dir), cb = checksums(b.paths.output_dir);
  v.require(ca.size() == cb.size(), "artifact sets differ");
  std::size_t same = 0;
  for (const auto& [name, sum] : ca) {
    auto it = cb.find(name);
    if (it != cb.end() && it->second == sum) {
      ++same;
    } else {
      v.require(false, name + " differs");
    }
  }
  v.note(std::to_string(same) + "/" + std::to_string(ca.size()) + " artifacts byte-identical");
  return v;
}

// Peak live heap bytes of one streaming SMT_NMT run above the live bytes at
// its start. Models loaded by the caller fall outside the measurement.
std::size_t streaming_peak(const TunedToy& t, const fs::path& mono, const fs::path& out,
                           DropReport& report) {
  const SmtSystem beginner = t.system(scale_lm_weight(t.tuned_weights(), kLmScale));
  const GoodProvider provider =
      LocalTuned{std::make_shared<SmtSystem>(t.system(t.tuned_weights())), 1};
  SynthesisOptions options;
  options.threshold = t.config().edit_rate_threshold;
  options.batch_size = t.config().batch_size;

  const std::size_t base = g_live.load();
  g_peak.store(base);
  {
    SentenceReader reader(mono);
    PairWriter writer(out);
    report = generate_pairs([&reader] { return reader.next(); }, beginner, provider, options,
                            [&writer](const PairRecord& r) { writer.write(r); });
    writer.close();
  }
  return g_peak.load() - base;
}

Verdict streaming() {
  Verdict v;
  TunedToy& t = toy();
  if (!t.trained()) t.train_and_tune();

  const std::size_t before = g_live.load();
  {
    auto phrases = PhraseTable::read(t.out(artifact::kPhraseTable));
    auto lm = NGramModel::read_arpa(t.out(artifact::kLm));
    v.note("models " + fmt("%.1f MB", static_cast<double>(g_live.load() - before) / 1e6) +
           " (excluded)");
  }

  auto start = Clock::now();
  DropReport small_report, large_report;
  const std::size_t small =
      streaming_peak(t, t.path("mono-small.src"), t.path("stream-small"), small_report);
  const std::size_t large =
      streaming_peak(t, t.path("mono.src"), t.path("stream-large"), large_report);
  const double ratio = static_cast<double>(large) / static_cast<double>(small);
  v.require(small_report.total == kStreamingSmall, "10k run consumed " +
                                                      std::to_string(small_report.total));
  v.require(large_report.total == kStreamingLarge, "100k run consumed " +
                                                      std::to_string(large_report.total));
  v.require(ratio < kStreamingRatio, "peak ratio " + fmt("%.3f", ratio));
  v.note("peak working heap 10k " + fmt("%.2f MB", static_cast<double>(small) / 1e6) +
         ", 100k " + fmt("%.2f MB", static_cast<double>(large) / 1e6) + ", ratio " +
         fmt("%.3f", ratio));
  v.note(fmt("%.0f s", seconds_since(start)));
  return v;
}

struct Criterion {
  int number;
  const char* name;
  std::function<Verdict()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "degradation direction", degradation_direction},
      {2, "MERT monotonicity", mert_monotonicity},
      {3, "exact-search oracle", exact_search_oracle},
      {4, "EM oracle", em_oracle},
      {5, "BLEU oracle", bleu_oracle},
      {6, "F0.5 oracle", f05_oracle},
      {7, "filter soundness", filter_soundness},
      {8, "error-profile machinery", error_profile},
      {9, "determinism", determinism},
      {10, "streaming memory", streaming},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool pass = v.failures.empty();
    failed += !pass;
    std::string detail;
    for (const auto& n : v.notes) detail += (detail.empty() ? "" : "; ") + n;
    for (const auto& f : v.failures) detail += (detail.empty() ? "" : "; ") + ("FAILED " + f);
    std::cout << (pass ? "PASS" : "FAIL") << "  " << c.number << ". " << c.name << ": "
              << detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
