// latresc/lattice_io.hpp

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

// Text lattice format:
//
//   utt <utt-id>
//   <src> <dst> <word> <lm_cost>,<ac_cost>     (arc)
//   <state> <lm_cost>,<ac_cost>                (final)
//   <blank line>
//
// A stream may hold any number of lattices back to back.

#ifndef LATRESC_LATTICE_IO_HPP_
#define LATRESC_LATTICE_IO_HPP_

#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "latresc/lattice.hpp"

namespace latresc {

namespace detail {

inline bool parse_cost_pair(std::string_view tok, CostPair *out) {
  auto comma = tok.find(',');
  if (comma == std::string_view::npos) return false;
  return parse_double(tok.substr(0, comma), &out->lm_cost) &&
         parse_double(tok.substr(comma + 1), &out->ac_cost);
}

}  // namespace detail

/// Reads the next lattice from `in`. Returns nullopt at end of stream.
/// Throws DataError on malformed text or when the lattice fails validate().
inline std::optional<Lattice> read_lattice(std::istream &in) {
  std::string line;
  std::vector<std::string_view> toks;
  // Skip leading blank lines.
  while (true) {
    if (!std::getline(in, line)) return std::nullopt;
    toks = detail::split_ws(line);
    if (!toks.empty()) break;
  }
  if (toks.size() != 2 || toks[0] != "utt")
    throw DataError("lattice: expected 'utt <utt-id>', got '" + line + "'");
  Lattice lat;
  lat.utt_id = std::string(toks[1]);
  const std::string where = "lattice " + lat.utt_id + ": ";
  StateId max_state = 0;
  auto check_state = [&](std::string_view tok) {
    StateId s = 0;
    if (!detail::parse_int(tok, &s) || s < 0)
      throw DataError(where + "bad state id '" + std::string(tok) + "'");
    max_state = std::max(max_state, s);
    return s;
  };
  while (std::getline(in, line)) {
    toks = detail::split_ws(line);
    if (toks.empty()) break;
    if (toks.size() == 4) {
      Arc arc;
      arc.src = check_state(toks[0]);
      arc.dst = check_state(toks[1]);
      if (!detail::parse_int(toks[2], &arc.word) || arc.word < 0)
        throw DataError(where + "bad word id '" + std::string(toks[2]) + "'");
      if (!detail::parse_cost_pair(toks[3], &arc.weight))
        throw DataError(where + "malformed cost pair '" + std::string(toks[3]) + "'");
      lat.arcs.push_back(arc);
    } else if (toks.size() == 2) {
      StateId s = check_state(toks[0]);
      CostPair w;
      if (!detail::parse_cost_pair(toks[1], &w))
        throw DataError(where + "malformed cost pair '" + std::string(toks[1]) + "'");
      if (!lat.finals.emplace(s, w).second)
        throw DataError(where + "duplicate final state " + std::to_string(s));
    } else {
      throw DataError(where + "malformed line '" + line + "'");
    }
  }
  lat.num_states = max_state + 1;
  auto issues = validate(lat);
  if (!issues.empty()) {
    std::string msg = where + issues.front();
    for (std::size_t i = 1; i < issues.size() && i < 5; ++i) msg += "; " + issues[i];
    throw DataError(msg);
  }
  return lat;
}

inline Lattice parse_lattice(std::string_view text) {
  std::istringstream in{std::string(text)};
  auto lat = read_lattice(in);
  if (!lat) throw DataError("lattice: empty input");
  return std::move(*lat);
}

inline std::vector<Lattice> parse_lattices(std::istream &in) {
  std::vector<Lattice> out;
  while (auto lat = read_lattice(in)) out.push_back(std::move(*lat));
  return out;
}

/// Canonical text: arcs sorted by (src, dst, word), finals by state, costs
/// with 17 significant digits, terminated by a blank line.
inline std::string write_lattice(const Lattice &lat) {
  std::string out = "utt " + lat.utt_id + "\n";
  std::vector<Arc> arcs = lat.arcs;
  std::stable_sort(arcs.begin(), arcs.end(), arc_less);
  for (const Arc &a : arcs) {
    out += std::to_string(a.src) + ' ' + std::to_string(a.dst) + ' ' +
           std::to_string(a.word) + ' ' + detail::format_cost(a.weight.lm_cost) +
           ',' + detail::format_cost(a.weight.ac_cost) + '\n';
  }
  for (const auto &[s, w] : lat.finals) {
    out += std::to_string(s) + ' ' + detail::format_cost(w.lm_cost) + ',' +
           detail::format_cost(w.ac_cost) + '\n';
  }
  out += '\n';
  return out;
}

}  // namespace latresc

#endif  // LATRESC_LATTICE_IO_HPP_
