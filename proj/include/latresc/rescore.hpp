// latresc/rescore.hpp

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

#ifndef LATRESC_RESCORE_HPP_
#define LATRESC_RESCORE_HPP_

#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "latresc/lattice.hpp"
#include "latresc/lm_interface.hpp"
#include "latresc/paths.hpp"

namespace latresc {

/// Composed state of the lattice with the on-demand LM.
struct ComposedState {
  StateId lattice_state = 0;
  HistoryState lm_state;

  friend bool operator==(const ComposedState &, const ComposedState &) = default;
};

struct ComposedStateHash {
  std::size_t operator()(const ComposedState &c) const noexcept {
    std::size_t seed = HistoryHash()(c.lm_state);
    return seed ^ (std::hash<StateId>()(c.lattice_state) + 0x9e3779b97f4a7c15ULL +
                   (seed << 6) + (seed >> 2));
  }
};

namespace detail {

inline double checked_score(LmBackend &backend, const LmQuery &q,
                            const SymbolTable *symbols) {
  double s;
  try {
    s = backend.score(q);
  } catch (const Error &e) {
    throw Error(e.kind(), std::string(e.what()) + " (while scoring " + describe(q, symbols) + ")");
  }
  if (!std::isfinite(s) || s > 0.0)
    throw DataError("LM returned invalid log-probability " + format_shortest(s) + " for " +
                    describe(q, symbols));
  return s;
}

}  // namespace detail

/// Composes `lat` with `backend` under an order-n history approximation.
///
/// The first-pass LM costs are discarded: every word arc gets
/// lm_cost = -log p(word | history), epsilon arcs get lm_cost 0 and keep the
/// history, and final states get lm_cost = -log p(</s> | history). Acoustic
/// costs pass through untouched. Output states are numbered in breadth-first
/// discovery order with arcs expanded in canonical order, which makes the
/// result deterministic and makes rescoring a rescored lattice a no-op.
inline Lattice rescore(const Lattice &lat, LmBackend &backend, int order,
                       const SymbolTable *symbols = nullptr) {
  if (lat.num_states <= 0) throw DataError("rescore: empty lattice " + lat.utt_id);
  auto out = detail::build_adjacency(lat, true);
  std::vector<ComposedState> states;
  std::unordered_map<ComposedState, StateId, ComposedStateHash> index;
  auto intern = [&](StateId s, HistoryState h) {
    ComposedState c{s, std::move(h)};
    auto it = index.find(c);
    if (it != index.end()) return it->second;
    StateId id = static_cast<StateId>(states.size());
    index.emplace(c, id);
    states.push_back(std::move(c));
    return id;
  };

  Lattice result;
  result.utt_id = lat.utt_id;
  intern(Lattice::kStart, HistoryState::initial(order));
  for (StateId cur = 0; cur < static_cast<StateId>(states.size()); ++cur) {
    // Copy: `states` may reallocate while we intern successors.
    const StateId ls = states[cur].lattice_state;
    const HistoryState h = states[cur].lm_state;
    for (std::size_t ai : out.of(ls)) {
      const Arc &a = lat.arcs[ai];
      Arc arc;
      arc.src = cur;
      arc.word = a.word;
      arc.weight.ac_cost = a.weight.ac_cost;
      if (a.word == kEpsilon) {
        arc.weight.lm_cost = 0.0;
        arc.dst = intern(a.dst, h);
      } else {
        arc.weight.lm_cost = -detail::checked_score(backend, LmQuery{h, a.word}, symbols);
        arc.dst = intern(a.dst, advance(h, a.word));
      }
      result.arcs.push_back(arc);
    }
    if (auto f = lat.finals.find(ls); f != lat.finals.end()) {
      CostPair w;
      w.lm_cost = -detail::checked_score(backend, LmQuery{h, kEos}, symbols);
      w.ac_cost = f->second.ac_cost;
      result.finals.emplace(cur, w);
    }
  }
  result.num_states = static_cast<StateId>(states.size());
  return result;
}

/// Lowest-cost path under ac_cost + lm_scale * lm_cost. Equal costs are
/// resolved by the lexicographically smallest word-id sequence.
inline Path best_path(const Lattice &lat, double lm_scale) {
  auto order = topological_order(lat);
  if (!order) throw DataError("best_path: lattice " + lat.utt_id + " is not acyclic");
  auto out = detail::build_adjacency(lat, true);
  constexpr std::size_t kFinal = std::numeric_limits<std::size_t>::max();
  constexpr std::size_t kNone = kFinal - 1;
  std::vector<double> cost(lat.num_states, detail::kInf);
  std::vector<std::size_t> choice(lat.num_states, kNone);

  auto suffix = [&](std::size_t first_arc, StateId from) {
    std::vector<WordId> words;
    std::size_t c = first_arc;
    StateId s = from;
    while (c != kFinal) {
      const Arc &a = lat.arcs[c];
      if (a.word != kEpsilon) words.push_back(a.word);
      s = a.dst;
      c = choice[s];
    }
    return words;
  };

  for (auto it = order->rbegin(); it != order->rend(); ++it) {
    const StateId s = *it;
    if (auto f = lat.finals.find(s); f != lat.finals.end()) {
      cost[s] = f->second.total(lm_scale);
      choice[s] = kFinal;
    }
    for (std::size_t ai : out.of(s)) {
      const Arc &a = lat.arcs[ai];
      if (choice[a.dst] == kNone) continue;
      const double c = a.weight.total(lm_scale) + cost[a.dst];
      bool better = c < cost[s];
      if (!better && c == cost[s]) {
        // Tie: an empty suffix (stop here) sorts first.
        auto mine = suffix(ai, s);
        auto theirs = choice[s] == kFinal ? std::vector<WordId>{} : suffix(choice[s], s);
        better = mine < theirs;
      }
      if (better) {
        cost[s] = c;
        choice[s] = ai;
      }
    }
  }
  if (choice[Lattice::kStart] == kNone)
    throw DataError("best_path: lattice " + lat.utt_id + " has no complete path");
  std::vector<std::size_t> arcs;
  StateId s = Lattice::kStart;
  while (choice[s] != kFinal) {
    arcs.push_back(choice[s]);
    s = lat.arcs[choice[s]].dst;
  }
  return make_path(lat, std::move(arcs), s);
}

}  // namespace latresc

#endif  // LATRESC_RESCORE_HPP_
