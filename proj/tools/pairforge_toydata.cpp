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

// Writes a template-grammar toy corpus.

#include <iostream>

#include <CLI11.hpp>

#include "pairforge/error.hpp"
#include "pairforge/toydata.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic bilingual toy corpus"};
  std::string out = "toy";
  std::size_t train = 5000, dev = 300, test = 300, mono = 1000;
  std::uint64_t seed = 7;
  app.add_option("--out", out, "Output directory");
  app.add_option("--train", train, "Training pairs");
  app.add_option("--dev", dev, "Dev pairs");
  app.add_option("--test", test, "Test pairs");
  app.add_option("--mono", mono, "Monolingual sentences per side");
  app.add_option("--seed", seed, "Random seed");
  CLI11_PARSE(app, argc, argv);
  try {
    pairforge::write_toy_dataset(out, pairforge::toy_dataset(train, dev, test, mono, seed));
  } catch (const pairforge::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
