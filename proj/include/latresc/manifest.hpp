// latresc/manifest.hpp

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

// Flat-file inputs: the session manifest and `utt_id w1 w2 ...` transcripts.

#ifndef LATRESC_MANIFEST_HPP_
#define LATRESC_MANIFEST_HPP_

#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "latresc/common.hpp"

namespace latresc {

struct ManifestRecord {
  std::string session_id;
  std::string utt_id;
  std::filesystem::path lattice_path;
  std::optional<std::vector<std::string>> reference;
};

using Manifest = std::vector<ManifestRecord>;

/// Parses `session<TAB>utt<TAB>lattice[<TAB>reference words]` lines. Blank
/// lines and `#` comments are skipped. Relative lattice paths resolve
/// against `base_dir`. Utterance ids must be unique and each session's
/// records contiguous.
inline Manifest parse_manifest(std::istream &in, const std::filesystem::path &base_dir = {}) {
  Manifest out;
  std::set<std::string> utts, closed_sessions;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::split_ws(line).empty() || line[0] == '#') continue;
    auto fail = [&](const std::string &msg) {
      throw DataError("manifest line " + std::to_string(lineno) + ": " + msg);
    };
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() < 3 || fields.size() > 4)
      fail("want session<TAB>utt<TAB>lattice[<TAB>reference]");
    ManifestRecord r;
    r.session_id = fields[0];
    r.utt_id = fields[1];
    if (r.session_id.empty() || r.utt_id.empty() || fields[2].empty()) fail("empty field");
    if (r.utt_id.find('/') != std::string::npos || detail::split_ws(r.utt_id).size() != 1)
      fail("bad utterance id '" + r.utt_id + "'");
    if (!utts.insert(r.utt_id).second) fail("duplicate utterance id " + r.utt_id);
    if (!out.empty() && out.back().session_id != r.session_id) closed_sessions.insert(out.back().session_id);
    if (closed_sessions.count(r.session_id))
      fail("session " + r.session_id + " is not contiguous");
    r.lattice_path = fields[2];
    if (r.lattice_path.is_relative() && !base_dir.empty()) r.lattice_path = base_dir / r.lattice_path;
    if (fields.size() == 4) {
      std::vector<std::string> words;
      for (auto t : detail::split_ws(fields[3])) words.emplace_back(t);
      r.reference = std::move(words);
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline Manifest read_manifest(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path());
}

struct TranscriptLine {
  std::string utt_id;
  std::vector<std::string> words;
};

using Transcript = std::vector<TranscriptLine>;

inline Transcript parse_transcript(std::istream &in, const std::string &name = "transcript") {
  Transcript out;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    TranscriptLine t{std::string(toks[0]), {}};
    if (!seen.insert(t.utt_id).second)
      throw DataError(name + " line " + std::to_string(lineno) + ": duplicate utterance " + t.utt_id);
    for (std::size_t i = 1; i < toks.size(); ++i) t.words.emplace_back(toks[i]);
    out.push_back(std::move(t));
  }
  return out;
}

inline Transcript read_transcript(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open transcript " + path.string());
  return parse_transcript(in, path.string());
}

inline void write_transcript(std::ostream &out, const Transcript &t) {
  for (const auto &line : t) {
    out << line.utt_id;
    for (const auto &w : line.words) out << ' ' << w;
    out << '\n';
  }
}

}  // namespace latresc

#endif  // LATRESC_MANIFEST_HPP_
