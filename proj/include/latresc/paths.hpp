// latresc/paths.hpp

// Copyright 2026  The latresc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef LATRESC_PATHS_HPP_
#define LATRESC_PATHS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "latresc/lattice.hpp"

namespace latresc {

/// A complete start-to-final path. Costs are summed arc by arc in path order
/// and then the final cost is added.
struct Path {
  std::vector<WordId> words;           // epsilons removed
  std::vector<std::size_t> arc_ids;    // indices into the source lattice
  StateId final_state = Lattice::kStart;
  double lm_cost = 0.0;
  double ac_cost = 0.0;

  double total(double lm_scale) const { return ac_cost + lm_scale * lm_cost; }
};

/// Recomputes a path's costs from its arcs, in path order.
inline Path make_path(const Lattice &lat, std::vector<std::size_t> arc_ids,
                      StateId final_state) {
  Path p;
  p.arc_ids = std::move(arc_ids);
  p.final_state = final_state;
  for (std::size_t ai : p.arc_ids) {
    const Arc &a = lat.arcs[ai];
    if (a.word != kEpsilon) p.words.push_back(a.word);
    p.lm_cost += a.weight.lm_cost;
    p.ac_cost += a.weight.ac_cost;
  }
  const CostPair &f = lat.finals.at(final_state);
  p.lm_cost += f.lm_cost;
  p.ac_cost += f.ac_cost;
  return p;
}

struct PathList {
  std::vector<Path> paths;
  bool truncated = false;  // more than `limit` paths exist
};

/// All complete paths, up to `limit`, ordered by word sequence (then cost).
/// Intended as a brute-force reference on small lattices.
inline PathList enumerate_paths(const Lattice &lat, std::size_t limit) {
  PathList result;
  if (lat.num_states <= 0) return result;
  auto out = detail::build_adjacency(lat, true);
  std::vector<std::size_t> arc_stack;
  // Explicit DFS; frame = (state, next out-arc position).
  std::vector<std::pair<StateId, std::size_t>> frames{{Lattice::kStart, 0}};
  auto visit_final = [&](StateId s) {
    if (!lat.finals.count(s)) return true;
    if (result.paths.size() >= limit) {
      result.truncated = true;
      return false;
    }
    result.paths.push_back(make_path(lat, arc_stack, s));
    return true;
  };
  if (!visit_final(Lattice::kStart)) frames.clear();
  while (!frames.empty()) {
    auto &[s, next] = frames.back();
    auto succ = out.of(s);
    if (next == succ.size()) {
      frames.pop_back();
      if (!arc_stack.empty()) arc_stack.pop_back();
      continue;
    }
    std::size_t ai = succ[next++];
    arc_stack.push_back(ai);
    StateId d = lat.arcs[ai].dst;
    frames.emplace_back(d, 0);
    if (!visit_final(d)) break;
  }
  std::stable_sort(result.paths.begin(), result.paths.end(),
                   [](const Path &a, const Path &b) {
                     if (a.words != b.words) return a.words < b.words;
                     if (a.lm_cost != b.lm_cost) return a.lm_cost < b.lm_cost;
                     return a.ac_cost < b.ac_cost;
                   });
  return result;
}

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Forward (best cost from start) and backward (best cost to any final)
// potentials under `lm_scale`, in topological order.
struct Potentials {
  std::vector<double> forward;
  std::vector<double> backward;
  double best = kInf;
};

inline Potentials compute_potentials(const Lattice &lat, double lm_scale) {
  auto order = topological_order(lat);
  if (!order) throw DataError("lattice " + lat.utt_id + " is cyclic");
  Potentials p;
  p.forward.assign(lat.num_states, kInf);
  p.backward.assign(lat.num_states, kInf);
  p.forward[Lattice::kStart] = 0.0;
  auto out = build_adjacency(lat, true);
  for (StateId s : *order) {
    if (p.forward[s] == kInf) continue;
    for (std::size_t ai : out.of(s)) {
      const Arc &a = lat.arcs[ai];
      p.forward[a.dst] = std::min(p.forward[a.dst], p.forward[s] + a.weight.total(lm_scale));
    }
  }
  for (auto it = order->rbegin(); it != order->rend(); ++it) {
    StateId s = *it;
    double b = kInf;
    if (auto f = lat.finals.find(s); f != lat.finals.end()) b = f->second.total(lm_scale);
    for (std::size_t ai : out.of(s)) {
      const Arc &a = lat.arcs[ai];
      b = std::min(b, a.weight.total(lm_scale) + p.backward[a.dst]);
    }
    p.backward[s] = b;
  }
  p.best = p.backward[Lattice::kStart];
  return p;
}

}  // namespace detail

/// Beam pruning: keeps the states and arcs that lie on some complete path
/// whose total cost is within `beam` of the best. States are renumbered in
/// their original relative order, so the start state stays 0.
inline Lattice prune(const Lattice &lat, double beam, double lm_scale) {
  if (!(beam >= 0.0)) throw UsageError("prune: beam must be non-negative");
  auto pot = detail::compute_potentials(lat, lm_scale);
  if (pot.best == detail::kInf) throw DataError("lattice " + lat.utt_id + " has no complete path");
  // Potentials are summed in a different order than path costs; allow for
  // rounding at the boundary.
  const double limit = pot.best + beam + 1e-12 * (1.0 + std::abs(pot.best));
  std::vector<char> keep_state(lat.num_states, 0);
  std::vector<char> keep_arc(lat.arcs.size(), 0);
  for (std::size_t i = 0; i < lat.arcs.size(); ++i) {
    const Arc &a = lat.arcs[i];
    double through = pot.forward[a.src] + a.weight.total(lm_scale) + pot.backward[a.dst];
    if (through <= limit) {
      keep_arc[i] = 1;
      keep_state[a.src] = keep_state[a.dst] = 1;
    }
  }
  for (const auto &[s, w] : lat.finals)
    if (pot.forward[s] + w.total(lm_scale) <= limit) keep_state[s] = 1;
  keep_state[Lattice::kStart] = 1;

  std::vector<StateId> remap(lat.num_states, -1);
  StateId next = 0;
  for (StateId s = 0; s < lat.num_states; ++s)
    if (keep_state[s]) remap[s] = next++;
  Lattice result;
  result.utt_id = lat.utt_id;
  result.num_states = next;
  for (std::size_t i = 0; i < lat.arcs.size(); ++i) {
    if (!keep_arc[i]) continue;
    Arc a = lat.arcs[i];
    a.src = remap[a.src];
    a.dst = remap[a.dst];
    result.arcs.push_back(a);
  }
  for (const auto &[s, w] : lat.finals)
    if (pot.forward[s] + w.total(lm_scale) <= limit) result.finals.emplace(remap[s], w);
  return result;
}

}  // namespace latresc

#endif  // LATRESC_PATHS_HPP_
