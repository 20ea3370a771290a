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

// pairforge: train, tune, degrade, synthesize and evaluate.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pairforge/error.hpp"
#include "pairforge/pipeline.hpp"

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
  std::optional<double> lm_scale;
  std::optional<double> threshold;
  std::optional<std::string> out;
};

void add_global(CLI::App& app, GlobalFlags& g) {
  app.add_option("--config", g.config, "Pipeline config (JSON)");
  app.add_option("--threads", g.threads, "Worker thread cap");
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--lm-scale", g.lm_scale, "LM weight factor for the beginner system");
  app.add_option("--threshold", g.threshold, "Edit-rate filter threshold");
  app.add_option("--out", g.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poor-to-good sentence pair synthesis via degraded SMT"};
  app.require_subcommand(1);
  GlobalFlags flags;
  add_global(app, flags);
  pairforge::CommandArgs args;
  std::string input, hyp, ref, src, pairs;

  for (auto name : {"train-lm", "align", "phrases", "tune", "decode", "synthesize",
                    "evaluate", "profile"}) {
    auto* sub = app.add_subcommand(name);
    sub->fallthrough();
    if (std::string(name) == "decode") {
      sub->add_option("--input", input, "Source sentences (default: paths.dev_source)");
      sub->add_flag("--beginner", args.beginner, "Scale the lm weight by --lm-scale");
    } else if (std::string(name) == "evaluate") {
      sub->add_option("--hyp", hyp, "System output")->required();
      sub->add_option("--ref", ref, "References")->required();
      sub->add_option("--src", src, "Uncorrected sources (enables F0.5)");
    } else if (std::string(name) == "profile") {
      sub->add_option("--pairs", pairs, "Pair TSV (default: <out>/pairs.tsv)");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  args.input = input;
  args.hyp = hyp;
  args.ref = ref;
  args.src = src;
  args.pairs = pairs;

  const auto command = pairforge::parse_command(app.get_subcommands().front()->get_name());
  pairforge::PipelineConfig config;
  try {
    if (!flags.config.empty()) config = pairforge::PipelineConfig::load(flags.config);
    if (flags.threads) config.threads = *flags.threads;
    if (flags.seed) config.seed = *flags.seed;
    if (flags.lm_scale) config.lm_scale = *flags.lm_scale;
    if (flags.threshold) config.edit_rate_threshold = *flags.threshold;
    if (flags.out) config.paths.output_dir = *flags.out;
    config.validate();
  } catch (const pairforge::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return pairforge::run(*command, config, args, std::cout, std::cerr);
}
