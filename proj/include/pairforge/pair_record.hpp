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

#ifndef PAIRFORGE_PAIR_RECORD_HPP_
#define PAIRFORGE_PAIR_RECORD_HPP_

#include <array>
#include <cstddef>
#include <string_view>

#include "pairforge/textcore.hpp"

namespace pairforge {

enum class Generator {
  kSmtNmt,
  kSmtGold,
  kCorruption,
  kRoundTrip,
  kBackTranslation,
};

inline constexpr std::array<Generator, 5> kAllGenerators = {
    Generator::kSmtNmt, Generator::kSmtGold, Generator::kCorruption,
    Generator::kRoundTrip, Generator::kBackTranslation};

// SMT_NMT, SMT_GOLD, CORRUPTION, ROUND_TRIP, BACK_TRANSLATION
std::string_view generator_name(Generator g);
// Throws Error(kFormat) for an unknown tag.
Generator parse_generator(std::string_view tag);

// One synthesized poor -> good pair.
struct PairRecord {
  Sentence poor;
  Sentence good;
  Generator generator = Generator::kSmtGold;
  double edit_rate = 0.0;
  std::size_t source_id = 0;
};

// Fills edit_rate from the two sides. Throws Error(kEmptySource) for an empty
// poor side.
PairRecord make_record(Sentence poor, Sentence good, Generator generator,
                       std::size_t source_id);

}  // namespace pairforge

#endif  // PAIRFORGE_PAIR_RECORD_HPP_
