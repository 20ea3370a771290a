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

#ifndef PAIRFORGE_PIPELINE_HPP_
#define PAIRFORGE_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pairforge/mert.hpp"
#include "pairforge/synth.hpp"

namespace pairforge {

struct PipelinePaths {
  std::filesystem::path parallel_source;
  std::filesystem::path parallel_target;
  std::filesystem::path monolingual_source;
  std::filesystem::path dev_source;
  std::filesystem::path dev_target;
  std::filesystem::path english_text;  // target-language text for corruption etc.
  std::filesystem::path seed_gec;      // poor TAB good
  std::filesystem::path output_dir = "out";
};

// "local" uses the tuned system at full lm weight; "external" the HTTP client.
struct ProviderSpec {
  std::string type = "local";
  std::string endpoint;
  std::int64_t timeout_ms = 30000;
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;
  int max_retries = 3;
};

// Relative share of each generator among the configured inputs.
struct GeneratorMix {
  double smt_gold = 0.5;
  double smt_nmt = 0.5;
  double corruption = 0.0;
  double back_translation = 0.0;
  double round_trip = 0.0;
};

struct PipelineConfig {
  PipelinePaths paths;
  int lm_order = 3;
  double lm_scale = kDefaultLmScale;
  double edit_rate_threshold = kDefaultEditRateThreshold;
  std::size_t beam_size = 4;
  std::size_t distortion_limit = 6;
  std::size_t max_phrase_len = kDefaultMaxPhraseLen;
  int em_iterations = 10;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  bool filter = true;
  std::size_t max_pairs = 0;  // source sentences consumed by synthesize; 0 = all
  std::size_t batch_size = 256;
  std::size_t dev_size = kDefaultDevSize;
  MertConfig mert;            // seed and threads follow the top-level fields
  ProviderSpec provider;
  GeneratorMix mix;
  CorruptionRuleSet corruption_rules = CorruptionRuleSet::defaults();

  // Throws Error(kConfigError) naming the offending field. Relative paths are
  // resolved against `base`.
  static PipelineConfig from_json(const std::string& text,
                                  const std::filesystem::path& base = {});
  static PipelineConfig load(const std::filesystem::path& path);
  void validate() const;
  std::string to_json() const;
};

enum class Command {
  kTrainLm,
  kAlign,
  kPhrases,
  kTune,
  kDecode,
  kSynthesize,
  kEvaluate,
  kProfile,
};

std::string_view command_name(Command c);
std::optional<Command> parse_command(std::string_view name);

struct CommandArgs {
  std::filesystem::path input;  // decode
  bool beginner = false;        // decode with the lm weight scaled
  std::filesystem::path hyp;    // evaluate
  std::filesystem::path ref;
  std::filesystem::path src;
  std::filesystem::path pairs;  // profile
};

// Artifact names inside output_dir.
namespace artifact {
inline constexpr const char* kLm = "lm.arpa";
inline constexpr const char* kLexF2e = "lex.f2e";
inline constexpr const char* kLexE2f = "lex.e2f";
inline constexpr const char* kAlignment = "aligned.grow-diag";
inline constexpr const char* kPhraseTable = "phrase-table.txt";
inline constexpr const char* kWeights = "weights.json";
inline constexpr const char* kMertLog = "mert.csv";
inline constexpr const char* kDecoded = "decoded.txt";
inline constexpr const char* kPairsPrefix = "pairs";
inline constexpr const char* kSynthReport = "synth-report.json";
inline constexpr const char* kProfile = "profile.json";
inline constexpr const char* kEvaluation = "evaluation.json";
}  // namespace artifact

// Runs one command. Throws Error.
void run_command(Command command, const PipelineConfig& config,
                 const CommandArgs& args, std::ostream& log);

// run_command with errors mapped to exit codes: 0 ok, 1 validation
// (ConfigError, MissingArtifact), 2 anything else.
int run(Command command, const PipelineConfig& config, const CommandArgs& args,
        std::ostream& log, std::ostream& err);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace pairforge

#endif  // PAIRFORGE_PIPELINE_HPP_
