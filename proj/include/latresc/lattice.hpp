// latresc/lattice.hpp

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

#ifndef LATRESC_LATTICE_HPP_
#define LATRESC_LATTICE_HPP_

#include <algorithm>
#include <cmath>
#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "latresc/common.hpp"

namespace latresc {

// Costs are negative natural-log probabilities. The LM and acoustic parts
// stay separate so the first-pass LM score can be replaced exactly.
struct CostPair {
  double lm_cost = 0.0;
  double ac_cost = 0.0;

  double total(double lm_scale) const { return ac_cost + lm_scale * lm_cost; }

  friend bool operator==(const CostPair &, const CostPair &) = default;
  friend auto operator<=>(const CostPair &, const CostPair &) = default;
};

struct Arc {
  StateId src = 0;
  StateId dst = 0;
  WordId word = kEpsilon;
  CostPair weight;

  friend bool operator==(const Arc &, const Arc &) = default;
};

/// Canonical arc order: (src, dst, word), then weights.
inline bool arc_less(const Arc &a, const Arc &b) {
  return std::tie(a.src, a.dst, a.word, a.weight) <
         std::tie(b.src, b.dst, b.word, b.weight);
}

/// Acyclic word lattice. State 0 is the start state.
struct Lattice {
  static constexpr StateId kStart = 0;

  std::string utt_id;
  StateId num_states = 0;
  std::vector<Arc> arcs;
  std::map<StateId, CostPair> finals;

  friend bool operator==(const Lattice &, const Lattice &) = default;
};

/// Copy of `lat` with arcs in canonical order.
inline Lattice canonical(Lattice lat) {
  std::stable_sort(lat.arcs.begin(), lat.arcs.end(), arc_less);
  return lat;
}

/// Equality up to arc order.
inline bool structurally_equal(const Lattice &a, const Lattice &b) {
  return canonical(a) == canonical(b);
}

namespace detail {

// CSR-style adjacency: arc indices grouped by source (or destination) state,
// each group in canonical arc order.
struct Adjacency {
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> arc_ids;

  std::span<const std::size_t> of(StateId s) const {
    return {arc_ids.data() + offsets[s], offsets[s + 1] - offsets[s]};
  }
};

inline Adjacency build_adjacency(const Lattice &lat, bool by_source) {
  Adjacency adj;
  const auto n = static_cast<std::size_t>(std::max<StateId>(lat.num_states, 0));
  adj.offsets.assign(n + 1, 0);
  std::vector<std::size_t> order(lat.arcs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return arc_less(lat.arcs[x], lat.arcs[y]);
  });
  for (const Arc &a : lat.arcs) {
    StateId key = by_source ? a.src : a.dst;
    if (key >= 0 && static_cast<std::size_t>(key) < n) ++adj.offsets[key + 1];
  }
  for (std::size_t i = 0; i < n; ++i) adj.offsets[i + 1] += adj.offsets[i];
  adj.arc_ids.resize(adj.offsets[n]);
  std::vector<std::size_t> fill(adj.offsets.begin(), adj.offsets.end() - 1);
  for (std::size_t i : order) {
    const Arc &a = lat.arcs[i];
    StateId key = by_source ? a.src : a.dst;
    if (key >= 0 && static_cast<std::size_t>(key) < n) adj.arc_ids[fill[key]++] = i;
  }
  return adj;
}

inline bool in_range(const Lattice &lat, StateId s) {
  return s >= 0 && s < lat.num_states;
}

}  // namespace detail

/// Kahn topological order of all states; nullopt when the graph has a cycle
/// or an out-of-range arc.
inline std::optional<std::vector<StateId>> topological_order(const Lattice &lat) {
  for (const Arc &a : lat.arcs)
    if (!detail::in_range(lat, a.src) || !detail::in_range(lat, a.dst))
      return std::nullopt;
  std::vector<int> indegree(lat.num_states, 0);
  for (const Arc &a : lat.arcs) ++indegree[a.dst];
  auto out = detail::build_adjacency(lat, true);
  std::vector<StateId> order;
  order.reserve(lat.num_states);
  std::vector<StateId> ready;
  for (StateId s = lat.num_states - 1; s >= 0; --s)
    if (indegree[s] == 0) ready.push_back(s);
  while (!ready.empty()) {
    StateId s = ready.back();
    ready.pop_back();
    order.push_back(s);
    for (std::size_t ai : out.of(s))
      if (--indegree[lat.arcs[ai].dst] == 0) ready.push_back(lat.arcs[ai].dst);
  }
  if (static_cast<StateId>(order.size()) != lat.num_states) return std::nullopt;
  return order;
}

/// Reports every invariant violation; an empty result means the lattice is
/// valid (acyclic, in range, finite costs, connected both ways, has a final).
inline std::vector<std::string> validate(const Lattice &lat) {
  std::vector<std::string> issues;
  if (lat.num_states <= 0) {
    issues.push_back("lattice has no states");
    return issues;
  }
  bool ranges_ok = true;
  for (std::size_t i = 0; i < lat.arcs.size(); ++i) {
    const Arc &a = lat.arcs[i];
    if (!detail::in_range(lat, a.src) || !detail::in_range(lat, a.dst)) {
      issues.push_back("arc " + std::to_string(i) + " (" + std::to_string(a.src) +
                       "->" + std::to_string(a.dst) + ") references a missing state");
      ranges_ok = false;
    }
    if (a.word < 0)
      issues.push_back("arc " + std::to_string(i) + " has negative word id");
    if (!std::isfinite(a.weight.lm_cost) || !std::isfinite(a.weight.ac_cost))
      issues.push_back("arc " + std::to_string(i) + " has a non-finite cost");
  }
  if (lat.finals.empty()) issues.push_back("no final state");
  for (const auto &[s, w] : lat.finals) {
    if (!detail::in_range(lat, s)) {
      issues.push_back("final state " + std::to_string(s) + " out of range");
      ranges_ok = false;
    }
    if (!std::isfinite(w.lm_cost) || !std::isfinite(w.ac_cost))
      issues.push_back("final state " + std::to_string(s) + " has a non-finite cost");
  }
  if (!ranges_ok) return issues;

  auto out = detail::build_adjacency(lat, true);
  auto in = detail::build_adjacency(lat, false);

  // Cycle detection by iterative DFS colouring; reports one state per cycle.
  {
    std::vector<char> colour(lat.num_states, 0);
    for (StateId root = 0; root < lat.num_states; ++root) {
      if (colour[root]) continue;
      std::vector<std::pair<StateId, std::size_t>> stack{{root, 0}};
      colour[root] = 1;
      while (!stack.empty()) {
        auto &[s, next] = stack.back();
        auto succ = out.of(s);
        if (next < succ.size()) {
          StateId d = lat.arcs[succ[next++]].dst;
          if (colour[d] == 1) {
            issues.push_back("cycle through state " + std::to_string(d));
          } else if (colour[d] == 0) {
            colour[d] = 1;
            stack.emplace_back(d, 0);
          }
        } else {
          colour[s] = 2;
          stack.pop_back();
        }
      }
    }
  }

  auto sweep = [&](std::vector<StateId> seeds, const detail::Adjacency &adj,
                   bool forward) {
    std::vector<char> seen(lat.num_states, 0);
    for (StateId s : seeds) seen[s] = 1;
    while (!seeds.empty()) {
      StateId s = seeds.back();
      seeds.pop_back();
      for (std::size_t ai : adj.of(s)) {
        StateId n = forward ? lat.arcs[ai].dst : lat.arcs[ai].src;
        if (!seen[n]) {
          seen[n] = 1;
          seeds.push_back(n);
        }
      }
    }
    return seen;
  };
  auto reach = sweep({Lattice::kStart}, out, true);
  std::vector<StateId> final_states;
  for (const auto &[s, w] : lat.finals) final_states.push_back(s);
  auto coreach = sweep(final_states, in, false);
  for (StateId s = 0; s < lat.num_states; ++s) {
    if (!reach[s]) issues.push_back("state " + std::to_string(s) + " unreachable");
    if (!coreach[s])
      issues.push_back("state " + std::to_string(s) + " not co-reachable");
  }
  return issues;
}

}  // namespace latresc

#endif  // LATRESC_LATTICE_HPP_
