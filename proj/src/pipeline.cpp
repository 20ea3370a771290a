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

#include "pairforge/pipeline.hpp"

#include <openssl/evp.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "pairforge/align.hpp"
#include "pairforge/decode.hpp"
#include "pairforge/error.hpp"
#include "pairforge/lm.hpp"
#include "pairforge/metrics.hpp"
#include "pairforge/mtclient.hpp"

namespace pairforge {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------- config

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::kConfigError, field + ": " + what);
}

void expect_object(const json& v, const std::string& field) {
  if (!v.is_object()) config_error(field, "expected an object");
}

double get_real(const json& v, const std::string& field) {
  if (!v.is_number()) config_error(field, "expected a number");
  return v.get<double>();
}

std::size_t get_count(const json& v, const std::string& field) {
  if (!v.is_number_unsigned()) config_error(field, "expected a non-negative integer");
  return v.get<std::size_t>();
}

int get_int(const json& v, const std::string& field) {
  if (!v.is_number_integer()) config_error(field, "expected an integer");
  return v.get<int>();
}

bool get_bool(const json& v, const std::string& field) {
  if (!v.is_boolean()) config_error(field, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& field) {
  if (!v.is_string()) config_error(field, "expected a string");
  return v.get<std::string>();
}

fs::path get_path(const json& v, const std::string& field, const fs::path& base) {
  fs::path p = get_string(v, field);
  if (!p.empty() && p.is_relative() && !base.empty()) p = base / p;
  return p;
}

void read_paths(const json& j, PipelinePaths& p, const fs::path& base) {
  expect_object(j, "paths");
  for (const auto& [key, v] : j.items()) {
    const std::string field = "paths." + key;
    if (key == "parallel_source") p.parallel_source = get_path(v, field, base);
    else if (key == "parallel_target") p.parallel_target = get_path(v, field, base);
    else if (key == "monolingual_source") p.monolingual_source = get_path(v, field, base);
    else if (key == "dev_source") p.dev_source = get_path(v, field, base);
    else if (key == "dev_target") p.dev_target = get_path(v, field, base);
    else if (key == "english_text") p.english_text = get_path(v, field, base);
    else if (key == "seed_gec") p.seed_gec = get_path(v, field, base);
    else if (key == "output_dir") p.output_dir = get_path(v, field, base);
    else config_error(field, "unknown key");
  }
}

void read_mert(const json& j, MertConfig& m) {
  expect_object(j, "mert");
  for (const auto& [key, v] : j.items()) {
    const std::string field = "mert." + key;
    if (key == "outer_iters") m.outer_iters = get_int(v, field);
    else if (key == "directions_per_iter") m.directions_per_iter = get_int(v, field);
    else if (key == "nbest_size") m.nbest_size = get_count(v, field);
    else if (key == "max_inner_rounds") m.max_inner_rounds = get_int(v, field);
    else config_error(field, "unknown key");
  }
}

void read_provider(const json& j, ProviderSpec& p) {
  expect_object(j, "provider");
  for (const auto& [key, v] : j.items()) {
    const std::string field = "provider." + key;
    if (key == "type") p.type = get_string(v, field);
    else if (key == "endpoint") p.endpoint = get_string(v, field);
    else if (key == "timeout_ms") p.timeout_ms = static_cast<std::int64_t>(get_count(v, field));
    else if (key == "batch_size") p.batch_size = get_count(v, field);
    else if (key == "max_in_flight") p.max_in_flight = get_count(v, field);
    else if (key == "max_retries") p.max_retries = get_int(v, field);
    else config_error(field, "unknown key");
  }
}

void read_mix(const json& j, GeneratorMix& m) {
  expect_object(j, "mix");
  for (const auto& [key, v] : j.items()) {
    const std::string field = "mix." + key;
    if (key == "smt_gold") m.smt_gold = get_real(v, field);
    else if (key == "smt_nmt") m.smt_nmt = get_real(v, field);
    else if (key == "corruption") m.corruption = get_real(v, field);
    else if (key == "back_translation") m.back_translation = get_real(v, field);
    else if (key == "round_trip") m.round_trip = get_real(v, field);
    else config_error(field, "unknown key");
  }
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const std::string& text, const fs::path& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error("config", std::string("malformed JSON: ") + e.what());
  }
  expect_object(j, "config");
  PipelineConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "paths") read_paths(v, c.paths, base);
    else if (key == "lm_order") c.lm_order = get_int(v, key);
    else if (key == "lm_scale") c.lm_scale = get_real(v, key);
    else if (key == "edit_rate_threshold") c.edit_rate_threshold = get_real(v, key);
    else if (key == "beam_size") c.beam_size = get_count(v, key);
    else if (key == "distortion_limit") c.distortion_limit = get_count(v, key);
    else if (key == "max_phrase_len") c.max_phrase_len = get_count(v, key);
    else if (key == "em_iterations") c.em_iterations = get_int(v, key);
    else if (key == "seed") c.seed = get_count(v, key);
    else if (key == "threads") c.threads = get_count(v, key);
    else if (key == "filter") c.filter = get_bool(v, key);
    else if (key == "max_pairs") c.max_pairs = get_count(v, key);
    else if (key == "batch_size") c.batch_size = get_count(v, key);
    else if (key == "dev_size") c.dev_size = get_count(v, key);
    else if (key == "mert") read_mert(v, c.mert);
    else if (key == "provider") read_provider(v, c.provider);
    else if (key == "mix") read_mix(v, c.mix);
    else if (key == "corruption_rules") c.corruption_rules = CorruptionRuleSet::from_json(v.dump());
    else config_error(key, "unknown key");
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingArtifact, "missing config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str(), path.parent_path());
}

void PipelineConfig::validate() const {
  if (lm_order < 1 || lm_order > kMaxLmOrder) config_error("lm_order", "must be in [1, 5]");
  if (!(lm_scale >= 0.0) || !std::isfinite(lm_scale)) config_error("lm_scale", "must be >= 0");
  if (!(edit_rate_threshold > 0.0)) config_error("edit_rate_threshold", "must be > 0");
  if (beam_size == 0) config_error("beam_size", "must be positive");
  if (max_phrase_len == 0) config_error("max_phrase_len", "must be positive");
  if (em_iterations < 0) config_error("em_iterations", "must be >= 0");
  if (batch_size == 0) config_error("batch_size", "must be positive");
  if (dev_size == 0) config_error("dev_size", "must be positive");
  if (mert.outer_iters < 1) config_error("mert.outer_iters", "must be positive");
  if (mert.directions_per_iter < static_cast<int>(kNumFeatures))
    config_error("mert.directions_per_iter", "must be at least 7");
  if (mert.nbest_size == 0) config_error("mert.nbest_size", "must be positive");
  if (mert.max_inner_rounds < 1) config_error("mert.max_inner_rounds", "must be positive");
  if (provider.type != "local" && provider.type != "external")
    config_error("provider.type", "must be \"local\" or \"external\"");
  if (provider.batch_size == 0) config_error("provider.batch_size", "must be positive");
  if (provider.max_in_flight == 0) config_error("provider.max_in_flight", "must be positive");
  if (provider.max_retries < 0) config_error("provider.max_retries", "must be >= 0");
  for (auto [name, share] : {std::pair{"mix.smt_gold", mix.smt_gold},
                             std::pair{"mix.smt_nmt", mix.smt_nmt},
                             std::pair{"mix.corruption", mix.corruption},
                             std::pair{"mix.back_translation", mix.back_translation},
                             std::pair{"mix.round_trip", mix.round_trip}}) {
    if (!(share >= 0.0) || !std::isfinite(share)) config_error(name, "must be >= 0");
  }
  try {
    corruption_rules.validate();
  } catch (const Error& e) {
    config_error("corruption_rules", e.what());
  }
}

std::string PipelineConfig::to_json() const {
  ordered_json j;
  j["paths"] = {{"parallel_source", paths.parallel_source.string()},
                {"parallel_target", paths.parallel_target.string()},
                {"monolingual_source", paths.monolingual_source.string()},
                {"dev_source", paths.dev_source.string()},
                {"dev_target", paths.dev_target.string()},
                {"english_text", paths.english_text.string()},
                {"seed_gec", paths.seed_gec.string()},
                {"output_dir", paths.output_dir.string()}};
  j["lm_order"] = lm_order;
  j["lm_scale"] = lm_scale;
  j["edit_rate_threshold"] = edit_rate_threshold;
  j["beam_size"] = beam_size;
  j["distortion_limit"] = distortion_limit;
  j["max_phrase_len"] = max_phrase_len;
  j["em_iterations"] = em_iterations;
  j["seed"] = seed;
  j["threads"] = threads;
  j["filter"] = filter;
  j["max_pairs"] = max_pairs;
  j["batch_size"] = batch_size;
  j["dev_size"] = dev_size;
  j["mert"] = {{"outer_iters", mert.outer_iters},
               {"directions_per_iter", mert.directions_per_iter},
               {"nbest_size", mert.nbest_size},
               {"max_inner_rounds", mert.max_inner_rounds}};
  j["provider"] = {{"type", provider.type},
                   {"endpoint", provider.endpoint},
                   {"timeout_ms", provider.timeout_ms},
                   {"batch_size", provider.batch_size},
                   {"max_in_flight", provider.max_in_flight},
                   {"max_retries", provider.max_retries}};
  j["mix"] = {{"smt_gold", mix.smt_gold},
              {"smt_nmt", mix.smt_nmt},
              {"corruption", mix.corruption},
              {"back_translation", mix.back_translation},
              {"round_trip", mix.round_trip}};
  j["corruption_rules"] = ordered_json::parse(corruption_rules.to_json());
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- commands

std::string_view command_name(Command c) {
  switch (c) {
    case Command::kTrainLm: return "train-lm";
    case Command::kAlign: return "align";
    case Command::kPhrases: return "phrases";
    case Command::kTune: return "tune";
    case Command::kDecode: return "decode";
    case Command::kSynthesize: return "synthesize";
    case Command::kEvaluate: return "evaluate";
    case Command::kProfile: return "profile";
  }
  return "";
}

std::optional<Command> parse_command(std::string_view name) {
  for (auto c : {Command::kTrainLm, Command::kAlign, Command::kPhrases, Command::kTune,
                 Command::kDecode, Command::kSynthesize, Command::kEvaluate,
                 Command::kProfile}) {
    if (command_name(c) == name) return c;
  }
  return std::nullopt;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

namespace {

class CommandRun {
 public:
  CommandRun(Command command, const PipelineConfig& config, std::ostream& log)
      : command_(command), config_(config), log_(log), out_dir_(config.paths.output_dir) {}

  fs::path out(const std::string& name) const { return out_dir_ / name; }

  // Path from config that must be set and exist.
  fs::path input(const fs::path& path, const std::string& field) {
    if (path.empty()) config_error(field, "required by " + std::string(command_name(command_)));
    return require(path);
  }

  fs::path require(const fs::path& path) {
    if (!fs::exists(path))
      throw Error(ErrorKind::kMissingArtifact, "missing artifact " + path.string());
    inputs_.push_back(path);
    return path;
  }

  void produced(const fs::path& path) { outputs_.push_back(path); }

  void prepare_output() { fs::create_directories(out_dir_); }

  void write_manifest() {
    ordered_json j;
    j["command"] = command_name(command_);
    auto settings = ordered_json::parse(config_.to_json());
    settings.erase("paths");
    j["settings"] = settings;
    auto files = [](const std::vector<fs::path>& paths) {
      ordered_json arr = ordered_json::array();
      for (const auto& p : paths)
        arr.push_back({{"file", p.filename().string()}, {"sha256", sha256_file(p)}});
      return arr;
    };
    j["inputs"] = files(inputs_);
    j["outputs"] = files(outputs_);
    std::ofstream f(out(std::string(command_name(command_)) + ".manifest.json"));
    if (!f) throw Error(ErrorKind::kIo, "cannot write manifest in " + out_dir_.string());
    f << j.dump(2) << "\n";
  }

  std::ostream& log() { return log_; }
  const PipelineConfig& config() const { return config_; }

 private:
  Command command_;
  const PipelineConfig& config_;
  std::ostream& log_;
  fs::path out_dir_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  f << text;
}

ParallelCorpus training_corpus(CommandRun& run) {
  const auto& p = run.config().paths;
  auto src = run.input(p.parallel_source, "paths.parallel_source");
  auto tgt = run.input(p.parallel_target, "paths.parallel_target");
  auto corpus = load_parallel(src, tgt);
  if (corpus.empty()) throw Error(ErrorKind::kEmptyCorpus, "parallel corpus has no usable pairs");
  run.log() << "pairs: " << corpus.size() << " (dropped " << corpus.dropped << ")\n";
  return corpus;
}

DecodeParams decode_params(const PipelineConfig& c) {
  return {c.beam_size, c.distortion_limit};
}

SmtSystem load_system(CommandRun& run) {
  auto phrases = std::make_shared<PhraseTable>(
      PhraseTable::read(run.require(run.out(artifact::kPhraseTable))));
  auto lm = std::make_shared<NGramModel>(NGramModel::read_arpa(run.require(run.out(artifact::kLm))));
  auto weights = read_weights(run.require(run.out(artifact::kWeights)));
  return SmtSystem(phrases, lm, weights, decode_params(run.config()));
}

void cmd_train_lm(CommandRun& run) {
  auto corpus = training_corpus(run);
  std::vector<Sentence> targets;
  targets.reserve(corpus.size());
  for (auto& p : corpus.pairs) targets.push_back(std::move(p.target));
  auto model = train_lm(targets, run.config().lm_order);
  run.prepare_output();
  model.write_arpa(run.out(artifact::kLm));
  run.produced(run.out(artifact::kLm));
}

void cmd_align(CommandRun& run) {
  auto corpus = training_corpus(run);
  auto aligned = align_corpus(corpus, run.config().em_iterations);
  run.prepare_output();
  aligned.forward.write(run.out(artifact::kLexF2e));
  aligned.reverse.write(run.out(artifact::kLexE2f));
  write_alignments(run.out(artifact::kAlignment), aligned.alignments);
  for (auto name : {artifact::kLexF2e, artifact::kLexE2f, artifact::kAlignment})
    run.produced(run.out(name));
}

void cmd_phrases(CommandRun& run) {
  auto corpus = training_corpus(run);
  auto alignments = read_alignments(run.require(run.out(artifact::kAlignment)), corpus);
  auto fwd = TranslationTable::read(run.require(run.out(artifact::kLexF2e)));
  auto rev = TranslationTable::read(run.require(run.out(artifact::kLexE2f)));
  auto table = build_phrase_table(corpus, alignments, run.config().max_phrase_len, fwd, rev);
  run.log() << "phrase pairs: " << table.size() << "\n";
  table.write(run.out(artifact::kPhraseTable));
  run.produced(run.out(artifact::kPhraseTable));
}

MertConfig mert_config(const PipelineConfig& c) {
  MertConfig m = c.mert;
  m.seed = c.seed;
  m.threads = c.threads;
  return m;
}

void cmd_tune(CommandRun& run) {
  const auto& c = run.config();
  auto phrases = std::make_shared<PhraseTable>(
      PhraseTable::read(run.require(run.out(artifact::kPhraseTable))));
  auto lm = std::make_shared<NGramModel>(NGramModel::read_arpa(run.require(run.out(artifact::kLm))));
  ParallelCorpus dev;
  if (!c.paths.dev_source.empty() || !c.paths.dev_target.empty()) {
    dev = load_parallel(run.input(c.paths.dev_source, "paths.dev_source"),
                        run.input(c.paths.dev_target, "paths.dev_target"));
  } else {
    dev = sample_dev(training_corpus(run), c.dev_size, c.seed);
  }
  if (dev.empty()) throw Error(ErrorKind::kEmptyCorpus, "dev set has no usable pairs");
  run.log() << "dev pairs: " << dev.size() << "\n";
  SmtSystem system(phrases, lm, LogLinearWeights{}, decode_params(c));
  auto state = mert_tune(dev, system, LogLinearWeights{}, mert_config(c));
  for (std::size_t i = 0; i < state.dev_bleu_history.size(); ++i)
    run.log() << "iteration " << i + 1 << " dev BLEU " << state.dev_bleu_history[i] << "\n";
  write_weights(run.out(artifact::kWeights), state.weights);
  write_mert_log(run.out(artifact::kMertLog), state);
  run.produced(run.out(artifact::kWeights));
  run.produced(run.out(artifact::kMertLog));
}

void cmd_decode(CommandRun& run, const CommandArgs& args) {
  const auto& c = run.config();
  fs::path input = args.input.empty() ? run.input(c.paths.dev_source, "paths.dev_source")
                                      : run.require(args.input);
  auto system = load_system(run);
  if (args.beginner) system = system.with_weights(scale_lm_weight(system.weights(), c.lm_scale));
  SentenceReader reader(input);
  std::ofstream out(run.out(artifact::kDecoded));
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + run.out(artifact::kDecoded).string());
  std::vector<Sentence> batch;
  std::size_t done = 0;
  // Blank input lines stay blank in the output.
  auto flush = [&] {
    std::vector<Sentence> nonblank;
    for (const auto& s : batch)
      if (!s.empty()) nonblank.push_back(s);
    auto translated = system.translate_batch(nonblank, c.threads);
    std::size_t k = 0;
    for (const auto& s : batch) out << (s.empty() ? "" : detokenize(translated[k++])) << "\n";
    done += batch.size();
    batch.clear();
  };
  while (auto s = reader.next()) {
    batch.push_back(std::move(*s));
    if (batch.size() == c.batch_size) flush();
  }
  flush();
  out.close();
  run.log() << "decoded: " << done << "\n";
  run.produced(run.out(artifact::kDecoded));
}

SentenceStream reader_stream(const fs::path& path) {
  auto reader = std::make_shared<SentenceReader>(path);
  return [reader]() { return reader->next(); };
}

PairStream parallel_stream(const fs::path& src, const fs::path& tgt) {
  auto s = std::make_shared<SentenceReader>(src);
  auto t = std::make_shared<SentenceReader>(tgt);
  return [s, t]() -> std::optional<SentencePair> {
    auto a = s->next();
    auto b = t->next();
    if (!a && !b) return std::nullopt;
    if (!a || !b)
      throw Error(ErrorKind::kLineCountMismatch, "parallel files differ in line count");
    return SentencePair{std::move(*a), std::move(*b)};
  };
}

void cmd_synthesize(CommandRun& run) {
  const auto& c = run.config();
  const auto& p = c.paths;
  auto beginner_base = load_system(run);
  const auto& tuned = beginner_base.weights();
  const SmtSystem beginner = beginner_base.with_weights(scale_lm_weight(tuned, c.lm_scale));

  struct Job {
    Generator generator;
    double share;
  };
  std::vector<Job> jobs;
  if (c.mix.smt_gold > 0 && !p.parallel_source.empty() && !p.parallel_target.empty())
    jobs.push_back({Generator::kSmtGold, c.mix.smt_gold});
  if (c.mix.smt_nmt > 0 && !p.monolingual_source.empty())
    jobs.push_back({Generator::kSmtNmt, c.mix.smt_nmt});
  if (c.mix.corruption > 0 && !p.english_text.empty())
    jobs.push_back({Generator::kCorruption, c.mix.corruption});
  if (c.mix.back_translation > 0 && !p.english_text.empty() && !p.seed_gec.empty())
    jobs.push_back({Generator::kBackTranslation, c.mix.back_translation});
  if (c.mix.round_trip > 0 && !p.english_text.empty() && !p.parallel_source.empty() &&
      !p.parallel_target.empty())
    jobs.push_back({Generator::kRoundTrip, c.mix.round_trip});
  if (jobs.empty())
    config_error("paths", "synthesize needs inputs for at least one generator in mix");

  // Quotas by cumulative rounding so they sum to max_pairs exactly.
  double total_share = 0.0;
  for (const auto& j : jobs) total_share += j.share;
  std::vector<std::size_t> quota(jobs.size(), 0);
  if (c.max_pairs > 0) {
    double acc = 0.0;
    std::size_t given = 0;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      acc += jobs[i].share;
      auto upto = static_cast<std::size_t>(std::llround(acc / total_share * c.max_pairs));
      quota[i] = upto - given;
      given = upto;
    }
  }

  SynthesisOptions base;
  base.threshold = c.edit_rate_threshold;
  base.filter = c.filter;
  base.batch_size = c.batch_size;
  base.threads = c.threads;

  PairWriter writer(p.output_dir, artifact::kPairsPrefix);
  const RecordSink sink = [&](const PairRecord& r) { writer.write(r); };
  DropReport report;
  SmtTrainingConfig training;
  training.lm_order = c.lm_order;
  training.em_iterations = c.em_iterations;
  training.max_phrase_len = c.max_phrase_len;
  training.decode = decode_params(c);
  training.dev_size = c.dev_size;
  training.mert = mert_config(c);

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (c.max_pairs > 0 && quota[i] == 0) continue;
    SynthesisOptions options = base;
    options.limit = quota[i];
    DropReport part;
    switch (jobs[i].generator) {
      case Generator::kSmtGold:
        part = generate_gold_pairs(
            parallel_stream(run.input(p.parallel_source, "paths.parallel_source"),
                            run.input(p.parallel_target, "paths.parallel_target")),
            beginner, options, sink);
        break;
      case Generator::kSmtNmt: {
        GoodProvider provider;
        if (c.provider.type == "external") {
          auto svc = ExternalService::from_env(c.provider.endpoint);
          if (svc.endpoint.empty()) config_error("provider.endpoint", "required for external provider");
          svc.timeout = std::chrono::milliseconds(c.provider.timeout_ms);
          svc.batch_size = c.provider.batch_size;
          svc.max_in_flight = c.provider.max_in_flight;
          svc.max_retries = c.provider.max_retries;
          provider = svc;
        } else {
          provider = LocalTuned{std::make_shared<SmtSystem>(beginner_base), c.threads};
        }
        part = generate_pairs(
            reader_stream(run.input(p.monolingual_source, "paths.monolingual_source")),
            beginner, provider, options, sink);
        break;
      }
      case Generator::kCorruption: {
        const auto& rules = c.corruption_rules;
        const std::uint64_t seed = c.seed;
        part = generate_records(
            reader_stream(run.input(p.english_text, "paths.english_text")),
            [&rules, seed](const Sentence& s, std::size_t id) {
              return corrupt(s, rules, sentence_seed(seed, id), id);
            },
            options, sink);
        break;
      }
      case Generator::kBackTranslation: {
        auto seed_pairs = read_tsv_corpus(run.input(p.seed_gec, "paths.seed_gec"));
        ParallelCorpus reversed = swapped(seed_pairs);  // corrected -> erroneous
        auto generator = train_error_generator(reversed, training);
        part = generate_records(
            reader_stream(run.input(p.english_text, "paths.english_text")),
            [&generator](const Sentence& s, std::size_t id) {
              return back_translate(s, *generator, id);
            },
            options, sink);
        break;
      }
      case Generator::kRoundTrip: {
        auto corpus = load_parallel(run.input(p.parallel_source, "paths.parallel_source"),
                                    run.input(p.parallel_target, "paths.parallel_target"));
        SmtTrainingConfig fwd_config = training;
        fwd_config.tune = false;
        fwd_config.init = tuned;
        auto fwd = train_system(swapped(corpus), fwd_config).system;
        part = generate_records(
            reader_stream(run.input(p.english_text, "paths.english_text")),
            [&fwd, &beginner](const Sentence& s, std::size_t id) {
              return roundtrip(s, *fwd, beginner, id);
            },
            options, sink);
        break;
      }
    }
    run.log() << generator_name(jobs[i].generator) << ": " << part.total << " generated, "
              << part.retained << " retained, " << part.dropped << " dropped\n";
    report += part;
  }
  writer.close();
  write_text(run.out(artifact::kSynthReport), report.to_json());
  for (const auto& path : writer.paths()) run.produced(path);
  run.produced(run.out(artifact::kSynthReport));
}

ordered_json profile_json(const ErrorProfile& p) {
  ordered_json j;
  j["pairs"] = p.pairs;
  j["poor_tokens"] = p.poor_tokens;
  j["edited_tokens"] = p.edited_tokens;
  j["edits"] = p.edits;
  j["error_rate"] = p.error_rate;
  j["pct_in_rules"] = p.pct_in_rules;
  ordered_json types = ordered_json::object();
  for (auto t : kAllErrorTypes) {
    auto it = p.per_type.find(t);
    types[std::string(error_type_name(t))] = it == p.per_type.end() ? 0 : it->second;
  }
  j["per_type"] = types;
  return j;
}

void cmd_profile(CommandRun& run, const CommandArgs& args) {
  fs::path pairs = args.pairs.empty() ? run.out(std::string(artifact::kPairsPrefix) + ".tsv")
                                      : args.pairs;
  run.require(pairs);
  std::ifstream in(pairs);
  ErrorProfileBuilder all;
  std::map<Generator, ErrorProfileBuilder> by_generator;
  std::string line;
  std::size_t id = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto record = parse_tsv_line(line, id++);
    all.add(record);
    by_generator.try_emplace(record.generator).first->second.add(record);
  }
  ordered_json j = profile_json(all.finish());
  ordered_json per = ordered_json::object();
  for (const auto& [g, builder] : by_generator)
    per[std::string(generator_name(g))] = profile_json(builder.finish());
  j["per_generator"] = per;
  run.prepare_output();
  write_text(run.out(artifact::kProfile), j.dump(2) + "\n");
  run.log() << j.dump(2) << "\n";
  run.produced(run.out(artifact::kProfile));
}

void cmd_evaluate(CommandRun& run, const CommandArgs& args) {
  if (args.hyp.empty()) config_error("--hyp", "required by evaluate");
  if (args.ref.empty()) config_error("--ref", "required by evaluate");
  auto hyps = load_sentences(run.require(args.hyp));
  auto refs = load_sentences(run.require(args.ref));
  if (hyps.size() != refs.size())
    throw Error(ErrorKind::kLineCountMismatch, "hypothesis and reference line counts differ");
  ordered_json j;
  j["sentences"] = hyps.size();
  j["bleu"] = bleu(refs, hyps);

  const fs::path lm_path = run.out(artifact::kLm);
  NGramModel lm;
  if (fs::exists(lm_path)) {
    lm = NGramModel::read_arpa(run.require(lm_path));
    j["lm"] = artifact::kLm;
  } else {
    lm = train_lm(refs, run.config().lm_order);
    j["lm"] = "reference";
  }
  j["perplexity"] = perplexity(lm, hyps);

  if (!args.src.empty()) {
    auto srcs = load_sentences(run.require(args.src));
    if (srcs.size() != hyps.size())
      throw Error(ErrorKind::kLineCountMismatch, "source and hypothesis line counts differ");
    std::vector<EditScript> system, gold;
    for (std::size_t i = 0; i < srcs.size(); ++i) {
      system.push_back(extract_edits(srcs[i], hyps[i]));
      gold.push_back(extract_edits(srcs[i], refs[i]));
    }
    auto f = f_beta(system, gold, 0.5);
    j["precision"] = f.precision;
    j["recall"] = f.recall;
    j["f0.5"] = f.f;
  }
  run.prepare_output();
  write_text(run.out(artifact::kEvaluation), j.dump(2) + "\n");
  run.log() << j.dump(2) << "\n";
  run.produced(run.out(artifact::kEvaluation));
}

}  // namespace

void run_command(Command command, const PipelineConfig& config, const CommandArgs& args,
                 std::ostream& log) {
  config.validate();
  CommandRun run(command, config, log);
  switch (command) {
    case Command::kTrainLm: cmd_train_lm(run); break;
    case Command::kAlign: cmd_align(run); break;
    case Command::kPhrases: cmd_phrases(run); break;
    case Command::kTune: cmd_tune(run); break;
    case Command::kDecode: cmd_decode(run, args); break;
    case Command::kSynthesize: cmd_synthesize(run); break;
    case Command::kEvaluate: cmd_evaluate(run, args); break;
    case Command::kProfile: cmd_profile(run, args); break;
  }
  run.write_manifest();
}

int run(Command command, const PipelineConfig& config, const CommandArgs& args,
        std::ostream& log, std::ostream& err) {
  try {
    run_command(command, config, args, log);
    return 0;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return e.kind() == ErrorKind::kConfigError || e.kind() == ErrorKind::kMissingArtifact ? 1 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace pairforge
