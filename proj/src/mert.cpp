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

#include "pairforge/mert.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "pairforge/error.hpp"

namespace pairforge {

namespace {

constexpr double kImprovement = 1e-12;

std::string pool_key(const Sentence& target, const FeatureVector& features) {
  std::string key = detokenize(target);
  char buf[32];
  for (double f : features) {
    std::snprintf(buf, sizeof buf, "|%.17g", f);
    key += buf;
  }
  return key;
}

struct Segment {
  std::size_t entry;
  double left;  // the segment is active on [left, next segment's left)
};

// Upper envelope of the lines a_i + gamma * b_i, left to right.
std::vector<Segment> upper_envelope(const std::vector<double>& a,
                                    const std::vector<double>& b) {
  std::vector<std::size_t> order(a.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (b[x] != b[y]) return b[x] < b[y];
    return a[x] > a[y];
  });
  std::vector<Segment> hull;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < order.size(); ++k) {
    std::size_t line = order[k];
    // Parallel lines: the first (highest intercept, lowest index) dominates.
    if (!hull.empty() && b[hull.back().entry] == b[line]) continue;
    double left = neg_inf;
    while (!hull.empty()) {
      const Segment& top = hull.back();
      left = (a[top.entry] - a[line]) / (b[line] - b[top.entry]);
      if (left <= top.left) {
        hull.pop_back();
        left = neg_inf;
      } else {
        break;
      }
    }
    hull.push_back({line, left});
  }
  return hull;
}

}  // namespace

NBestPool::NBestPool(std::vector<Sentence> refs)
    : refs_(std::move(refs)), entries_(refs_.size()), seen_(refs_.size()) {}

std::size_t NBestPool::add(std::size_t sentence, const Sentence& target,
                           const FeatureVector& features) {
  if (sentence >= entries_.size())
    throw Error(ErrorKind::kInvalidArgument, "pool sentence index out of range");
  if (!seen_[sentence].insert(pool_key(target, features)).second) return 0;
  entries_[sentence].push_back({target, features, bleu_stats(refs_[sentence], target)});
  return 1;
}

std::size_t NBestPool::add(std::size_t sentence, const NBestList& list) {
  std::size_t added = 0;
  for (const auto& e : list.entries) added += add(sentence, e.target, e.features);
  return added;
}

std::size_t NBestPool::size() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.size();
  return n;
}

std::vector<std::size_t> NBestPool::select(const FeatureVector& weights) const {
  std::vector<std::size_t> out(entries_.size(), 0);
  for (std::size_t s = 0; s < entries_.size(); ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < entries_[s].size(); ++k) {
      double score = dot(weights, entries_[s][k].features);
      if (score > best) {
        best = score;
        out[s] = k;
      }
    }
  }
  return out;
}

BleuStats NBestPool::stats(const FeatureVector& weights) const {
  BleuStats total;
  auto chosen = select(weights);
  for (std::size_t s = 0; s < entries_.size(); ++s)
    if (!entries_[s].empty()) total += entries_[s][chosen[s]].stats;
  return total;
}

LineSearchResult line_search(const NBestPool& pool, const FeatureVector& weights,
                             const FeatureVector& direction, double min_gamma,
                             double max_gamma) {
  if (pool.empty()) throw Error(ErrorKind::kEmptyPool, "n-best pool is empty");
  if (std::all_of(direction.begin(), direction.end(), [](double x) { return x == 0.0; }))
    throw Error(ErrorKind::kInvalidArgument, "search direction is zero");
  if (min_gamma > 0.0 || max_gamma < 0.0)
    throw Error(ErrorKind::kInvalidArgument, "gamma range must contain 0");

  struct Event {
    double at;
    std::size_t sentence;
    BleuStats delta;
  };
  std::vector<Event> events;
  BleuStats initial;
  for (std::size_t s = 0; s < pool.sentences(); ++s) {
    const auto& entries = pool.entries(s);
    if (entries.empty()) continue;
    std::vector<double> a(entries.size()), b(entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
      a[k] = dot(weights, entries[k].features);
      b[k] = dot(direction, entries[k].features);
    }
    auto hull = upper_envelope(a, b);
    initial += entries[hull.front().entry].stats;
    for (std::size_t k = 1; k < hull.size(); ++k) {
      BleuStats delta = entries[hull[k].entry].stats;
      delta -= entries[hull[k - 1].entry].stats;
      events.push_back({hull[k].left, s, delta});
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& x, const Event& y) { return x.at < y.at; });

  LineSearchResult result;
  const double inf = std::numeric_limits<double>::infinity();
  struct Interval {
    double lo, hi, bleu;
  };
  std::vector<Interval> intervals;
  BleuStats running = initial;
  double lo = -inf;
  for (std::size_t k = 0; k <= events.size();) {
    double hi = k < events.size() ? events[k].at : inf;
    intervals.push_back({lo, hi, running.score()});
    if (k == events.size()) break;
    std::size_t j = k;
    while (j < events.size() && events[j].at == hi) running += events[j++].delta;
    result.boundaries.push_back(hi);
    lo = hi;
    k = j;
  }

  auto representative = [&](double l, double h) {
    l = std::max(l, min_gamma);
    h = std::min(h, max_gamma);
    if (std::isinf(l) && std::isinf(h)) return 0.0;
    if (std::isinf(l)) return h - 1.0;
    if (std::isinf(h)) return l + 1.0;
    return 0.5 * (l + h);
  };

  double current = intervals.front().bleu;
  for (const auto& iv : intervals)
    if (iv.lo <= 0.0 && 0.0 < iv.hi) current = iv.bleu;
  result.bleu = current;
  double best_bleu = current;
  bool moved = false;
  for (const auto& iv : intervals) {
    if (iv.hi < min_gamma || iv.lo > max_gamma) continue;
    if (iv.hi == min_gamma && !std::isinf(iv.hi)) continue;
    if (iv.lo <= 0.0 && 0.0 < iv.hi) continue;
    double gamma = representative(iv.lo, iv.hi);
    bool better = iv.bleu > best_bleu + kImprovement;
    bool tie_closer = moved && std::abs(iv.bleu - best_bleu) <= kImprovement &&
                      std::abs(gamma) < std::abs(result.gamma);
    if (better || tie_closer) {
      if (better) best_bleu = iv.bleu;
      result.gamma = gamma;
      result.bleu = iv.bleu;
      moved = true;
    }
  }
  return result;
}

MertState mert_tune(const ParallelCorpus& dev, const SmtSystem& system,
                    const LogLinearWeights& init, const MertConfig& config) {
  if (dev.empty()) throw Error(ErrorKind::kEmptyCorpus, "empty dev set");
  if (config.outer_iters < 1)
    throw Error(ErrorKind::kInvalidArgument, "outer_iters must be >= 1");
  init.validate();

  std::vector<Sentence> refs;
  refs.reserve(dev.size());
  for (const auto& p : dev.pairs) refs.push_back(p.target);

  MertState state;
  state.pool = NBestPool(refs);
  state.weights = init;
  std::vector<FeatureVector> accepted{init.as_vector()};
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int it = 1; it <= config.outer_iters; ++it) {
    SmtSystem current = system.with_weights(state.weights);
    std::vector<NBestList> lists(dev.size());
    parallel_for(dev.size(), config.threads, [&](std::size_t i) {
      lists[i] = current.translate_nbest(dev.pairs[i].source, config.nbest_size);
    });
    std::size_t added = 0;
    for (std::size_t i = 0; i < dev.size(); ++i) added += state.pool.add(i, lists[i]);
    if (added == 0 && it > 1) break;
    state.iteration = it;

    FeatureVector w = state.weights.as_vector();
    double w_bleu = state.pool.bleu(w);
    state.dev_bleu_before.push_back(w_bleu);
    // Restart from whichever accepted point scores best on the grown pool.
    for (const auto& prev : accepted) {
      double b = state.pool.bleu(prev);
      if (b > w_bleu + kImprovement) {
        w = prev;
        w_bleu = b;
      }
    }

    for (int round = 0; round < config.max_inner_rounds; ++round) {
      std::vector<FeatureVector> directions;
      for (std::size_t f = 0; f < kNumFeatures; ++f) {
        FeatureVector d{};
        d[f] = 1.0;
        directions.push_back(d);
      }
      for (int r = static_cast<int>(kNumFeatures); r < config.directions_per_iter; ++r) {
        FeatureVector d{};
        double norm = 0.0;
        for (auto& x : d) {
          x = normal(rng);
          norm += x * x;
        }
        norm = std::sqrt(norm);
        for (auto& x : d) x /= norm;
        directions.push_back(d);
      }

      double best_bleu = w_bleu;
      FeatureVector best_w = w;
      for (const auto& d : directions) {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        if (d[kLm] > 0.0) lo = -w[kLm] / d[kLm];
        if (d[kLm] < 0.0) hi = w[kLm] / -d[kLm];
        auto found = line_search(state.pool, w, d, lo, hi);
        if (found.gamma == 0.0) continue;
        FeatureVector cand = w;
        for (std::size_t f = 0; f < kNumFeatures; ++f) cand[f] += found.gamma * d[f];
        cand[kLm] = std::max(cand[kLm], 0.0);
        double b = state.pool.bleu(cand);
        if (b > best_bleu + kImprovement) {
          best_bleu = b;
          best_w = cand;
        }
      }
      if (best_w == w) break;
      w = best_w;
      w_bleu = best_bleu;
    }

    double l1 = 0.0;
    for (double x : w) l1 += std::abs(x);
    if (l1 > 0.0)
      for (auto& x : w) x /= l1;
    state.weights = LogLinearWeights::from_vector(w);
    accepted.push_back(w);
    state.dev_bleu_history.push_back(state.pool.bleu(w));
  }
  return state;
}

ParallelCorpus sample_dev(const ParallelCorpus& corpus, std::size_t size,
                          std::uint64_t seed) {
  std::vector<std::size_t> idx(corpus.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (size < idx.size()) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < size; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(size);
    std::sort(idx.begin(), idx.end());
  }
  ParallelCorpus out;
  out.name = corpus.name + ".dev";
  for (auto i : idx) out.pairs.push_back(corpus.pairs[i]);
  return out;
}

void write_mert_log(const std::filesystem::path& path, const MertState& state) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << "iteration,dev_bleu\n";
  char buf[64];
  for (std::size_t i = 0; i < state.dev_bleu_history.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f\n", i + 1, state.dev_bleu_history[i]);
    out << buf;
  }
}

}  // namespace pairforge
