// latresc/wer.hpp

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

#ifndef LATRESC_WER_HPP_
#define LATRESC_WER_HPP_

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "latresc/lattice.hpp"
#include "latresc/paths.hpp"

namespace latresc {

struct WerCounts {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t reference_length = 0;

  std::size_t errors() const { return substitutions + insertions + deletions; }

  double rate() const {
    if (reference_length == 0) throw DataError("WER undefined for an empty reference");
    return static_cast<double>(errors()) / static_cast<double>(reference_length);
  }

  WerCounts &operator+=(const WerCounts &o) {
    substitutions += o.substitutions;
    insertions += o.insertions;
    deletions += o.deletions;
    reference_length += o.reference_length;
    return *this;
  }

  friend bool operator==(const WerCounts &, const WerCounts &) = default;
};

/// Minimal unit-cost alignment. Accepts an empty reference (every
/// hypothesis word is then an insertion). On backtrace ties a substitution
/// is preferred, then an insertion, then a deletion.
template <typename Seq>
WerCounts align(const Seq &hyp, const Seq &ref) {
  const std::size_t n = hyp.size(), m = ref.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t & { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      at(i, j) = std::min({at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0u : 1u),
                           at(i - 1, j) + 1, at(i, j - 1) + 1});
  WerCounts c;
  c.reference_length = m;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        at(i, j) == at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0u : 1u)) {
      if (!(hyp[i - 1] == ref[j - 1])) ++c.substitutions;
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++c.insertions;
      --i;
    } else {
      ++c.deletions;
      --j;
    }
  }
  return c;
}

/// Word error counts of `hyp` against `ref`; throws on an empty reference.
template <typename Seq>
WerCounts wer(const Seq &hyp, const Seq &ref) {
  if (ref.empty()) throw DataError("wer: empty reference");
  return align(hyp, ref);
}

/// Corpus aggregate: counts are summed, so the rate is total errors over
/// total reference words.
template <typename Seq>
WerCounts score_corpus(const std::vector<std::pair<Seq, Seq>> &pairs) {
  WerCounts total;
  for (const auto &[hyp, ref] : pairs) total += wer(hyp, ref);
  return total;
}

struct OraclePath {
  Path path;
  WerCounts counts;
  std::size_t distance = 0;
};

/// Lattice path with minimum edit distance to `reference`, by dynamic
/// programming over (lattice state, reference position). Ties go to the
/// lower lattice cost (lm_scale 1), then to the smaller word sequence.
inline OraclePath oracle_path(const Lattice &lat, const std::vector<WordId> &reference) {
  auto order = topological_order(lat);
  if (!order) throw DataError("oracle_path: lattice " + lat.utt_id + " is not acyclic");
  auto out = detail::build_adjacency(lat, true);
  const std::size_t R = reference.size();
  const std::size_t width = R + 1;

  enum class Move : std::uint8_t { kNone, kFinal, kAlign, kInsert, kSkip, kDelete };
  struct Cell {
    std::size_t edits = std::numeric_limits<std::size_t>::max();
    double cost = detail::kInf;
    Move move = Move::kNone;
    std::size_t arc = 0;
  };
  std::vector<Cell> table(static_cast<std::size_t>(lat.num_states) * width);
  auto cell = [&](StateId s, std::size_t j) -> Cell & { return table[s * width + j]; };

  // Follows a cell's choices, returning the emitted words.
  auto words_from = [&](StateId s, std::size_t j) {
    std::vector<WordId> words;
    while (true) {
      const Cell &c = cell(s, j);
      switch (c.move) {
        case Move::kFinal:
        case Move::kNone:
          return words;
        case Move::kDelete:
          ++j;
          break;
        case Move::kAlign:
          ++j;
          [[fallthrough]];
        case Move::kInsert:
        case Move::kSkip: {
          const Arc &a = lat.arcs[c.arc];
          if (a.word != kEpsilon) words.push_back(a.word);
          s = a.dst;
          break;
        }
      }
    }
  };

  auto offer = [&](StateId s, std::size_t j, std::size_t edits, double cost, Move move,
                   std::size_t arc) {
    Cell &c = cell(s, j);
    bool better = std::tie(edits, cost) < std::tie(c.edits, c.cost);
    if (!better && edits == c.edits && cost == c.cost) {
      Cell saved = c;
      c.move = move;
      c.arc = arc;
      auto mine = words_from(s, j);
      c = saved;
      better = mine < words_from(s, j);
    }
    if (better) c = Cell{edits, cost, move, arc};
  };

  for (auto it = order->rbegin(); it != order->rend(); ++it) {
    const StateId s = *it;
    for (std::size_t jj = width; jj-- > 0;) {
      if (jj == R)
        if (auto f = lat.finals.find(s); f != lat.finals.end())
          offer(s, jj, 0, f->second.total(1.0), Move::kFinal, 0);
      if (jj < R) {
        const Cell &next = cell(s, jj + 1);
        if (next.move != Move::kNone) offer(s, jj, next.edits + 1, next.cost, Move::kDelete, 0);
      }
      for (std::size_t ai : out.of(s)) {
        const Arc &a = lat.arcs[ai];
        const double w = a.weight.total(1.0);
        if (a.word == kEpsilon) {
          const Cell &next = cell(a.dst, jj);
          if (next.move != Move::kNone) offer(s, jj, next.edits, w + next.cost, Move::kSkip, ai);
          continue;
        }
        if (jj < R) {
          const Cell &next = cell(a.dst, jj + 1);
          if (next.move != Move::kNone)
            offer(s, jj, next.edits + (a.word == reference[jj] ? 0 : 1), w + next.cost,
                  Move::kAlign, ai);
        }
        const Cell &next = cell(a.dst, jj);
        if (next.move != Move::kNone)
          offer(s, jj, next.edits + 1, w + next.cost, Move::kInsert, ai);
      }
    }
  }
  const Cell &root = cell(Lattice::kStart, 0);
  if (root.move == Move::kNone)
    throw DataError("oracle_path: lattice " + lat.utt_id + " has no complete path");

  std::vector<std::size_t> arcs;
  StateId s = Lattice::kStart;
  std::size_t j = 0;
  while (cell(s, j).move != Move::kFinal) {
    const Cell &c = cell(s, j);
    if (c.move == Move::kDelete) {
      ++j;
      continue;
    }
    arcs.push_back(c.arc);
    if (c.move == Move::kAlign) ++j;
    s = lat.arcs[c.arc].dst;
  }
  OraclePath result;
  result.distance = root.edits;
  result.path = make_path(lat, std::move(arcs), s);
  result.counts = align(result.path.words, reference);
  return result;
}

}  // namespace latresc

#endif  // LATRESC_WER_HPP_
