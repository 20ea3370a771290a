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

#include "pairforge/decode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <deque>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "pairforge/error.hpp"

namespace pairforge {

double dot(const FeatureVector& a, const FeatureVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kNumFeatures; ++i) s += a[i] * b[i];
  return s;
}

FeatureVector LogLinearWeights::as_vector() const {
  return {phrase[0], phrase[1], phrase[2], phrase[3], lm, word_penalty, distortion};
}

LogLinearWeights LogLinearWeights::from_vector(const FeatureVector& v) {
  LogLinearWeights w;
  w.phrase = {v[kPhraseFwd], v[kPhraseRev], v[kLexFwd], v[kLexRev]};
  w.lm = v[kLm];
  w.word_penalty = v[kWordPenalty];
  w.distortion = v[kDistortion];
  w.validate();
  return w;
}

void LogLinearWeights::validate() const {
  for (double x : as_vector()) {
    if (!std::isfinite(x))
      throw Error(ErrorKind::kInvalidArgument, "non-finite feature weight");
  }
  if (lm < 0.0)
    throw Error(ErrorKind::kInvalidArgument, "language model weight is negative");
}

LogLinearWeights scale_lm_weight(const LogLinearWeights& w, double factor) {
  if (!(factor >= 0.0) || !std::isfinite(factor)) {
    throw Error(ErrorKind::kNegativeFactor,
                "lm scale factor must be a finite value >= 0");
  }
  LogLinearWeights out = w;
  out.lm = w.lm * factor;
  return out;
}

std::string weights_to_json(const LogLinearWeights& w) {
  nlohmann::ordered_json j;
  j["lm"] = w.lm;
  j["phrase"] = w.phrase;
  j["word_penalty"] = w.word_penalty;
  j["distortion"] = w.distortion;
  return j.dump(2) + "\n";
}

LogLinearWeights weights_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("weights file: ") + e.what());
  }
  static const char* kKeys[] = {"lm", "phrase", "word_penalty", "distortion"};
  if (!j.is_object()) throw Error(ErrorKind::kFormat, "weights file must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find_if(std::begin(kKeys), std::end(kKeys),
                     [&](const char* k) { return key == k; }) == std::end(kKeys))
      throw Error(ErrorKind::kFormat, "unknown weights key: " + key);
  }
  try {
    LogLinearWeights w;
    w.lm = j.at("lm").get<double>();
    auto phrase = j.at("phrase").get<std::vector<double>>();
    if (phrase.size() != 4)
      throw Error(ErrorKind::kFormat, "weights file: phrase needs 4 values");
    std::copy(phrase.begin(), phrase.end(), w.phrase.begin());
    w.word_penalty = j.at("word_penalty").get<double>();
    w.distortion = j.at("distortion").get<double>();
    w.validate();
    return w;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("weights file: ") + e.what());
  }
}

void write_weights(const std::filesystem::path& path, const LogLinearWeights& w) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << weights_to_json(w);
}

LogLinearWeights read_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return weights_from_json(buf.str());
}

namespace {

struct Option {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  const Sentence* target = nullptr;
  std::vector<WordId> target_ids;
  std::array<double, 4> phrase_logs{};
};

struct Edge {
  int parent = -1;
  int option = -1;
  int next = -1;  // next incoming edge of the same node
  FeatureVector delta{};
  double delta_score = 0.0;
};

struct Node {
  std::size_t cov_offset = 0;  // into the coverage arena
  std::array<WordId, kMaxLmOrder> lm_state{};
  std::size_t state_len = 0;
  long last_end = -1;
  std::size_t covered = 0;
  double score = 0.0;
  FeatureVector features{};
  int best_edge = -1;
  int first_edge = -1;
  int last_edge = -1;
  int hash_next = -1;
};

struct Path {
  double score = 0.0;
  int edge = -1;
  int parent_rank = -1;
};

class StackSearch {
 public:
  StackSearch(const PhraseTable& pt, const NGramModel& lm,
              const LogLinearWeights& w, const Sentence& src,
              const DecodeParams& params)
      : pt_(pt), lm_(lm), weights_(w.as_vector()), src_(src), params_(params) {
    if (src.empty()) throw Error(ErrorKind::kEmptySource, "nothing to translate");
    if (params.beam_size == 0)
      throw Error(ErrorKind::kInvalidArgument, "beam_size must be >= 1");
    build_options();
    run(params_.distortion_limit);
    if (stacks_.back().empty() && params_.distortion_limit > 0) run(0);
  }

  Translation best() const {
    int node = best_final();
    Translation t;
    t.target = partial_target(node);
    t.features = nodes_[node].features;
    t.score = dot(weights_, t.features);
    return t;
  }

  std::vector<Translation> nbest(std::size_t n) const {
    const std::size_t k = 2 * n;
    std::vector<std::vector<Path>> paths(nodes_.size());
    paths[0].push_back({});
    for (std::size_t s = 1; s < stacks_.size(); ++s) {
      for (int idx : stacks_[s]) {
        const Node& node = nodes_[idx];
        std::vector<Path> cands;
        auto add = [&](int e) {
          const Edge& edge = edges_[e];
          const auto& pp = paths[edge.parent];
          for (std::size_t r = 0; r < pp.size(); ++r)
            cands.push_back({pp[r].score + edge.delta_score, e, static_cast<int>(r)});
        };
        add(node.best_edge);
        for (int e = node.first_edge; e != -1; e = edges_[e].next)
          if (e != node.best_edge) add(e);
        std::stable_sort(cands.begin(), cands.end(),
                         [](const Path& a, const Path& b) { return a.score > b.score; });
        if (cands.size() > k) cands.resize(k);
        paths[idx] = std::move(cands);
      }
    }

    struct Candidate {
      double score;
      std::string text;
      Translation translation;
    };
    std::vector<Candidate> finals;
    for (int idx : stacks_.back()) {
      for (std::size_t r = 0; r < paths[idx].size(); ++r) {
        Translation t;
        std::vector<const Sentence*> pieces;
        int node = idx;
        int rank = static_cast<int>(r);
        while (node != 0) {
          const Path& p = paths[node][rank];
          const Edge& edge = edges_[p.edge];
          for (std::size_t f = 0; f < kNumFeatures; ++f) t.features[f] += edge.delta[f];
          pieces.push_back(options_[edge.option].target);
          node = edge.parent;
          rank = p.parent_rank;
        }
        for (auto it = pieces.rbegin(); it != pieces.rend(); ++it)
          t.target.insert(t.target.end(), (*it)->begin(), (*it)->end());
        t.score = dot(weights_, t.features);
        finals.push_back({paths[idx][r].score, detokenize(t.target), std::move(t)});
      }
    }
    std::stable_sort(finals.begin(), finals.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.text < b.text;
    });
    std::vector<Translation> out;
    std::vector<std::string> seen;
    for (auto& c : finals) {
      if (out.size() == n) break;
      if (std::find(seen.begin(), seen.end(), c.text) != seen.end()) continue;
      seen.push_back(c.text);
      out.push_back(std::move(c.translation));
    }
    return out;
  }

 private:
  void build_options() {
    const std::size_t n = src_.size();
    options_by_start_.assign(n, {});
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t e = s; e < n && e - s < pt_.max_phrase_len(); ++e) {
        Sentence phrase(src_.begin() + s, src_.begin() + e + 1);
        for (const auto& entry : pt_.lookup(phrase)) {
          Option opt;
          opt.start = s;
          opt.end = e;
          opt.target = &entry.target;
          for (const auto& tok : entry.target) opt.target_ids.push_back(lm_.id(tok));
          for (std::size_t f = 0; f < 4; ++f) opt.phrase_logs[f] = std::log10(entry.features[f]);
          options_by_start_[s].push_back(static_cast<int>(options_.size()));
          options_.push_back(opt);
        }
      }
      // Words without a single-word translation are copied through.
      if (pt_.lookup(Sentence{src_[s]}).empty()) {
        copies_.push_back(Sentence{src_[s]});
        Option opt;
        opt.start = opt.end = s;
        opt.target = &copies_.back();
        opt.target_ids.push_back(lm_.id(src_[s]));
        opt.phrase_logs = {kOovPenalty, 0.0, 0.0, 0.0};
        options_by_start_[s].push_back(static_cast<int>(options_.size()));
        options_.push_back(opt);
      }
    }
  }

  bool covered(const Node& node, std::size_t i) const {
    return (cov_arena_[node.cov_offset + i / 64] >> (i % 64)) & 1u;
  }

  Sentence partial_target(int idx) const {
    std::vector<const Sentence*> pieces;
    while (idx != 0) {
      const Edge& e = edges_[nodes_[idx].best_edge];
      pieces.push_back(options_[e.option].target);
      idx = e.parent;
    }
    Sentence out;
    for (auto it = pieces.rbegin(); it != pieces.rend(); ++it)
      out.insert(out.end(), (*it)->begin(), (*it)->end());
    return out;
  }

  // Higher score first; equal scores prefer the lexicographically smaller
  // target string.
  bool better(double score_a, const std::string& text_a, double score_b,
              const std::string& text_b) const {
    if (score_a != score_b) return score_a > score_b;
    return text_a < text_b;
  }

  void run(std::size_t distortion_limit) {
    const std::size_t n = src_.size();
    nodes_.clear();
    edges_.clear();
    cov_words_ = (n + 63) / 64;
    cov_arena_.assign(cov_words_, 0);
    stacks_.assign(n + 1, {});
    std::vector<std::unordered_map<std::uint64_t, int>> recombine(n + 1);

    Node root;
    if (lm_.order() > 1) root.lm_state[root.state_len++] = lm_.bos();
    nodes_.push_back(root);
    stacks_[0].push_back(0);

    for (std::size_t k = 0; k < n; ++k) {
      prune(stacks_[k]);
      for (int idx : stacks_[k]) {
        for (std::size_t start = 0; start < n; ++start) {
          const Node& parent = nodes_[idx];
          if (covered(parent, start)) continue;
          long jump = static_cast<long>(start) - (parent.last_end + 1);
          if (static_cast<std::size_t>(std::labs(jump)) > distortion_limit) continue;
          for (int opt_idx : options_by_start_[start]) {
            extend(idx, opt_idx, jump, recombine);
          }
        }
      }
    }
  }

  void extend(int parent_idx, int opt_idx, long jump,
              std::vector<std::unordered_map<std::uint64_t, int>>& recombine) {
    const Option& opt = options_[opt_idx];
    const Node& parent = nodes_[parent_idx];
    for (std::size_t i = opt.start; i <= opt.end; ++i)
      if (covered(parent, i)) return;

    cov_.assign(cov_arena_.begin() + parent.cov_offset,
                cov_arena_.begin() + parent.cov_offset + cov_words_);
    for (std::size_t i = opt.start; i <= opt.end; ++i)
      cov_[i / 64] |= std::uint64_t{1} << (i % 64);
    const std::size_t covered_count = parent.covered + (opt.end - opt.start + 1);
    const long last_end = static_cast<long>(opt.end);

    Edge edge;
    edge.parent = parent_idx;
    edge.option = opt_idx;
    for (std::size_t f = 0; f < 4; ++f) edge.delta[f] = opt.phrase_logs[f];
    const std::size_t state_len = static_cast<std::size_t>(lm_.order() - 1);
    std::array<WordId, 2 * kMaxLmOrder> ctx{};
    std::size_t ctx_len = parent.state_len;
    std::copy(parent.lm_state.begin(), parent.lm_state.begin() + ctx_len, ctx.begin());
    double lm_delta = 0.0;
    for (WordId w : opt.target_ids) {
      lm_delta += lm_.score({ctx.data(), ctx_len}, w);
      ctx[ctx_len++] = w;
      if (ctx_len > state_len) {
        std::copy(ctx.begin() + (ctx_len - state_len), ctx.begin() + ctx_len, ctx.begin());
        ctx_len = state_len;
      }
    }
    if (covered_count == src_.size()) lm_delta += lm_.score({ctx.data(), ctx_len}, lm_.eos());
    edge.delta[kLm] = lm_delta;
    edge.delta[kWordPenalty] = static_cast<double>(opt.target->size());
    edge.delta[kDistortion] = -static_cast<double>(std::labs(jump));
    edge.delta_score = dot(weights_, edge.delta);

    const double score = parent.score + edge.delta_score;
    FeatureVector features = parent.features;
    for (std::size_t f = 0; f < kNumFeatures; ++f) features[f] += edge.delta[f];

    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    for (std::uint64_t word : cov_) mix(word);
    for (std::size_t i = 0; i < ctx_len; ++i) mix(ctx[i]);
    mix(static_cast<std::uint64_t>(last_end));

    auto& table = recombine[covered_count];
    auto [slot, inserted] = table.try_emplace(h, -1);
    int match = -1;
    for (int c = slot->second; c != -1; c = nodes_[c].hash_next) {
      const Node& cand = nodes_[c];
      if (cand.last_end == last_end && cand.state_len == ctx_len &&
          std::equal(ctx.begin(), ctx.begin() + ctx_len, cand.lm_state.begin()) &&
          std::equal(cov_.begin(), cov_.end(), cov_arena_.begin() + cand.cov_offset)) {
        match = c;
        break;
      }
    }

    const int edge_idx = static_cast<int>(edges_.size());
    edges_.push_back(edge);
    if (match == -1) {
      Node child;
      child.cov_offset = cov_arena_.size();
      cov_arena_.insert(cov_arena_.end(), cov_.begin(), cov_.end());
      std::copy(ctx.begin(), ctx.begin() + ctx_len, child.lm_state.begin());
      child.state_len = ctx_len;
      child.covered = covered_count;
      child.last_end = last_end;
      child.score = score;
      child.features = features;
      child.best_edge = child.first_edge = child.last_edge = edge_idx;
      child.hash_next = slot->second;
      const int idx = static_cast<int>(nodes_.size());
      slot->second = idx;
      nodes_.push_back(child);
      stacks_[covered_count].push_back(idx);
      return;
    }
    bool wins = score > nodes_[match].score;
    if (score == nodes_[match].score) {
      Sentence mine = partial_target(parent_idx);
      mine.insert(mine.end(), opt.target->begin(), opt.target->end());
      wins = detokenize(mine) < detokenize(partial_target(match));
    }
    Node& existing = nodes_[match];
    edges_[existing.last_edge].next = edge_idx;
    existing.last_edge = edge_idx;
    if (wins) {
      existing.best_edge = edge_idx;
      existing.score = score;
      existing.features = features;
    }
  }

  void prune(std::vector<int>& stack) const {
    if (stack.size() <= 1) return;
    std::stable_sort(stack.begin(), stack.end(),
                     [&](int a, int b) { return nodes_[a].score > nodes_[b].score; });
    // Order runs of equal score by target text.
    for (std::size_t i = 0; i < stack.size();) {
      std::size_t j = i + 1;
      while (j < stack.size() && nodes_[stack[j]].score == nodes_[stack[i]].score) ++j;
      if (j - i > 1 && i < params_.beam_size) {
        std::vector<std::pair<std::string, int>> run;
        for (std::size_t k = i; k < j; ++k)
          run.emplace_back(detokenize(partial_target(stack[k])), stack[k]);
        std::stable_sort(run.begin(), run.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t k = i; k < j; ++k) stack[k] = run[k - i].second;
      }
      i = j;
    }
    if (stack.size() > params_.beam_size) stack.resize(params_.beam_size);
  }

  int best_final() const {
    const auto& finals = stacks_.back();
    int best = finals.front();
    std::string best_text = detokenize(partial_target(best));
    for (std::size_t i = 1; i < finals.size(); ++i) {
      int idx = finals[i];
      if (nodes_[idx].score < nodes_[best].score) continue;
      std::string text = detokenize(partial_target(idx));
      if (better(nodes_[idx].score, text, nodes_[best].score, best_text)) {
        best = idx;
        best_text = std::move(text);
      }
    }
    return best;
  }

  const PhraseTable& pt_;
  const NGramModel& lm_;
  FeatureVector weights_;
  const Sentence& src_;
  DecodeParams params_;

  std::vector<Option> options_;
  std::vector<std::vector<int>> options_by_start_;
  std::deque<Sentence> copies_;
  std::vector<std::uint64_t> cov_;
  std::size_t cov_words_ = 0;
  std::vector<std::uint64_t> cov_arena_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> stacks_;
};

}  // namespace

Translation decode(const PhraseTable& pt, const NGramModel& lm,
                   const LogLinearWeights& w, const Sentence& src,
                   const DecodeParams& params) {
  return StackSearch(pt, lm, w, src, params).best();
}

NBestList nbest(const PhraseTable& pt, const NGramModel& lm,
                const LogLinearWeights& w, const Sentence& src, std::size_t n,
                const DecodeParams& params) {
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "n-best size must be >= 1");
  NBestList list;
  list.entries = StackSearch(pt, lm, w, src, params).nbest(n);
  return list;
}

void write_nbest(std::ostream& out, const NBestList& list) {
  char buf[32];
  for (const auto& e : list.entries) {
    out << list.sentence_id << " ||| " << detokenize(e.target) << " |||";
    for (double f : e.features) {
      std::snprintf(buf, sizeof buf, " %.10g", f);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, " ||| %.10g", e.score);
    out << buf << '\n';
  }
}

std::vector<NBestList> read_nbest(std::istream& in) {
  std::vector<NBestList> lists;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      auto pos = line.find(" ||| ", start);
      fields.push_back(line.substr(start, pos == std::string::npos ? pos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 5;
    }
    if (fields.size() != 4) throw Error(ErrorKind::kFormat, "bad n-best line: " + line);
    std::size_t id = parse_count(fields[0], "n-best id");
    Translation t;
    t.target = tokenize(fields[1]);
    std::istringstream feats(fields[2]);
    for (auto& f : t.features)
      if (!(feats >> f)) throw Error(ErrorKind::kFormat, "n-best line needs 7 features");
    t.score = parse_real(fields[3], "n-best total");
    if (lists.empty() || lists.back().sentence_id != id) {
      lists.push_back({});
      lists.back().sentence_id = id;
    }
    lists.back().entries.push_back(std::move(t));
  }
  return lists;
}

SmtSystem::SmtSystem(std::shared_ptr<const PhraseTable> phrases,
                     std::shared_ptr<const NGramModel> lm, LogLinearWeights weights,
                     DecodeParams params)
    : phrases_(std::move(phrases)),
      lm_(std::move(lm)),
      weights_(weights),
      params_(params) {
  weights_.validate();
}

Translation SmtSystem::translate(const Sentence& src) const {
  return decode(*phrases_, *lm_, weights_, src, params_);
}

NBestList SmtSystem::translate_nbest(const Sentence& src, std::size_t n) const {
  return nbest(*phrases_, *lm_, weights_, src, n, params_);
}

std::vector<Sentence> SmtSystem::translate_batch(std::span<const Sentence> sources,
                                                 std::size_t threads) const {
  std::vector<Sentence> out(sources.size());
  parallel_for(sources.size(), threads, [&](std::size_t i) {
    out[i] = sources[i].empty() ? Sentence{} : translate(sources[i]).target;
  });
  return out;
}

SmtSystem SmtSystem::with_weights(const LogLinearWeights& w) const {
  return SmtSystem(phrases_, lm_, w, params_);
}

}  // namespace pairforge
