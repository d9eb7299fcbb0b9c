// tests/oracles.hpp

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

// Independent reference implementations used only by tests. They share no
// code with the library paths they check.

#ifndef LATRESC_TESTS_ORACLES_HPP_
#define LATRESC_TESTS_ORACLES_HPP_

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "latresc/lattice.hpp"
#include "latresc/paths.hpp"

namespace latresc::testing {

// Transitive closure by fixpoint iteration over the arc list.
inline std::vector<std::vector<char>> closure(const Lattice &lat) {
  const int n = lat.num_states;
  std::vector<std::vector<char>> r(n, std::vector<char>(n, 0));
  for (const Arc &a : lat.arcs) r[a.src][a.dst] = 1;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        if (r[i][k])
          for (int j = 0; j < n; ++j)
            if (r[k][j] && !r[i][j]) r[i][j] = changed = 1;
  }
  return r;
}

struct BruteConnectivity {
  std::vector<char> reachable, coreachable;
  bool cyclic = false;
};

inline BruteConnectivity brute_connectivity(const Lattice &lat) {
  BruteConnectivity b;
  auto r = closure(lat);
  const int n = lat.num_states;
  b.reachable.assign(n, 0);
  b.coreachable.assign(n, 0);
  for (int s = 0; s < n; ++s) {
    b.reachable[s] = s == 0 || r[0][s];
    for (const auto &[f, w] : lat.finals) b.coreachable[s] |= (s == f || r[s][f]);
    b.cyclic |= r[s][s];
  }
  return b;
}

// Plain two-row Levenshtein distance.
template <typename T>
std::size_t edit_distance(const std::vector<T> &a, const std::vector<T> &b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Brute-force best path: min total, then smallest word sequence.
inline const Path &brute_best(const std::vector<Path> &paths, double lm_scale) {
  const Path *best = &paths.front();
  for (const Path &p : paths) {
    double pt = p.total(lm_scale), bt = best->total(lm_scale);
    if (pt < bt || (pt == bt && p.words < best->words)) best = &p;
  }
  return *best;
}

}  // namespace latresc::testing

#endif  // LATRESC_TESTS_ORACLES_HPP_
