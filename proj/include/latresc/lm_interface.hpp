// latresc/lm_interface.hpp

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

// The LM side of lattice composition. An LM state is a bounded word history
// (the n-gram approximation of an unbounded-context model): two paths whose
// last order-1 words agree share one state, so composition stays finite and
// every (history, word) pair is scored exactly once.

#ifndef LATRESC_LM_INTERFACE_HPP_
#define LATRESC_LM_INTERFACE_HPP_

#include <algorithm>
#include <compare>
#include <cstddef>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "latresc/arpa.hpp"
#include "latresc/lattice.hpp"
#include "latresc/symbol_table.hpp"

namespace latresc {

/// Sentence-start marker inside a history. Not a lattice symbol.
inline constexpr WordId kBos = -1;
/// End-of-sentence query word, used for final-state scoring.
inline constexpr WordId kEos = -2;

struct HistoryState {
  std::vector<WordId> words;  // oldest first; length <= order-1
  int order = 2;

  static HistoryState initial(int order) {
    if (order < 2) throw UsageError("n-gram approximation order must be >= 2");
    return HistoryState{{kBos}, order};
  }

  friend bool operator==(const HistoryState &, const HistoryState &) = default;
  friend auto operator<=>(const HistoryState &, const HistoryState &) = default;
};

/// Appends `word` and drops the oldest entries beyond order-1.
inline HistoryState advance(const HistoryState &h, WordId word) {
  if (word == kEpsilon) throw UsageError("advance: epsilon carries no LM history");
  HistoryState next;
  next.order = h.order;
  const std::size_t cap = static_cast<std::size_t>(h.order - 1);
  const std::size_t total = h.words.size() + 1;
  const std::size_t drop = total > cap ? total - cap : 0;
  next.words.reserve(std::min(total, cap));
  for (std::size_t i = drop; i < h.words.size(); ++i) next.words.push_back(h.words[i]);
  next.words.push_back(word);
  return next;
}

struct LmQuery {
  HistoryState history;
  WordId word = kEos;

  bool is_final() const { return word == kEos; }

  friend bool operator==(const LmQuery &, const LmQuery &) = default;
  friend auto operator<=>(const LmQuery &, const LmQuery &) = default;
};

struct HistoryHash {
  std::size_t operator()(const HistoryState &h) const noexcept {
    std::size_t seed = std::hash<int>()(h.order);
    for (WordId w : h.words)
      seed ^= std::hash<WordId>()(w) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
    return seed;
  }
};

struct QueryHash {
  std::size_t operator()(const LmQuery &q) const noexcept {
    std::size_t seed = HistoryHash()(q.history);
    return seed ^ (std::hash<WordId>()(q.word) + 0x9e3779b97f4a7c15ULL + (seed << 6) +
                   (seed >> 2));
  }
};

/// Human-readable form, e.g. `([<s> so], does)`.
inline std::string describe(const LmQuery &q, const SymbolTable *symbols = nullptr) {
  auto name = [&](WordId w) -> std::string {
    if (w == kBos) return "<s>";
    if (w == kEos) return "</s>";
    if (symbols)
      if (const std::string *s = symbols->find(w)) return *s;
    return "#" + std::to_string(w);
  };
  std::string out = "([";
  for (std::size_t i = 0; i < q.history.words.size(); ++i) {
    if (i) out += ' ';
    out += name(q.history.words[i]);
  }
  return out + "], " + name(q.word) + ")";
}

/// Context words for a history: `<s>` for the start marker, symbol strings
/// otherwise. Throws DataError on an id missing from the table.
inline std::vector<std::string> context_words(const HistoryState &h,
                                              const SymbolTable &symbols) {
  std::vector<std::string> out;
  out.reserve(h.words.size());
  for (WordId w : h.words)
    out.push_back(w == kBos ? std::string(SymbolTable::kBos) : symbols.symbol(w));
  return out;
}

/// Deterministic on-demand LM. Scores are natural-log probabilities (<= 0).
/// Implementations need only support sequential use.
class LmBackend {
 public:
  virtual ~LmBackend() = default;

  virtual double score(const HistoryState &history, WordId word) = 0;
  virtual double score_final(const HistoryState &history) = 0;

  // Conversation memory hooks; memoryless backends ignore them.
  virtual void session_begin(const std::string & /*session_id*/) {}
  virtual void session_commit(std::span<const WordId> /*best_words*/) {}

  double score(const LmQuery &q) {
    return q.is_final() ? score_final(q.history) : score(q.history, q.word);
  }
};

/// Local backend over an ARPA model. Word ids are translated through the
/// symbol table once, at construction.
class ArpaBackend : public LmBackend {
 public:
  ArpaBackend(const ArpaModel &model, const SymbolTable &symbols) : model_(model) {
    for (const auto &[sym, id] : symbols.entries()) token_of_.emplace(id, model.token(sym));
  }

  using LmBackend::score;

  double score(const HistoryState &history, WordId word) override {
    return model_.logprob(tokens(history), token(word));
  }

  double score_final(const HistoryState &history) override {
    return model_.logprob(tokens(history), model_.eos());
  }

 private:
  ArpaModel::Token token(WordId w) const {
    if (w == kBos) return model_.bos();
    auto it = token_of_.find(w);
    if (it == token_of_.end())
      throw DataError("word id " + std::to_string(w) + " not in symbol table");
    return it->second;
  }

  std::vector<ArpaModel::Token> tokens(const HistoryState &h) const {
    std::vector<ArpaModel::Token> out;
    out.reserve(h.words.size());
    for (WordId w : h.words) out.push_back(token(w));
    return out;
  }

  const ArpaModel &model_;
  std::unordered_map<WordId, ArpaModel::Token> token_of_;
};

/// Query -> score map. In strict mode a lookup miss is an error. Filling is
/// single-writer; after freeze() the cache is read-only and may be shared.
class ScoreCache {
 public:
  explicit ScoreCache(bool strict = true) : strict_(strict) {}

  bool strict() const { return strict_; }
  bool frozen() const { return frozen_; }
  std::size_t size() const { return scores_.size(); }

  void insert(const LmQuery &q, double score) {
    if (frozen_) throw UsageError("score cache is frozen");
    scores_.insert_or_assign(q, score);
  }

  const double *find(const LmQuery &q) const {
    auto it = scores_.find(q);
    return it == scores_.end() ? nullptr : &it->second;
  }

  void freeze() { frozen_ = true; }

  const std::unordered_map<LmQuery, double, QueryHash> &scores() const { return scores_; }

 private:
  bool strict_;
  bool frozen_ = false;
  std::unordered_map<LmQuery, double, QueryHash> scores_;
};

/// Serves scores from a ScoreCache. On a miss, a strict cache raises; a
/// non-strict cache asks `inner` and memoizes the answer.
class CachedBackend : public LmBackend {
 public:
  CachedBackend(LmBackend *inner, ScoreCache &cache) : inner_(inner), cache_(cache) {}

  using LmBackend::score;

  double score(const HistoryState &history, WordId word) override {
    return lookup(LmQuery{history, word});
  }
  double score_final(const HistoryState &history) override {
    return lookup(LmQuery{history, kEos});
  }

  void session_begin(const std::string &id) override {
    if (inner_) inner_->session_begin(id);
  }
  void session_commit(std::span<const WordId> words) override {
    if (inner_) inner_->session_commit(words);
  }

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  double lookup(const LmQuery &q) {
    if (const double *s = cache_.find(q)) {
      ++hits_;
      return *s;
    }
    ++misses_;
    if (cache_.strict())
      throw DataError("strict score cache miss for " + describe(q));
    if (!inner_) throw DataError("score cache miss with no backing LM for " + describe(q));
    double s = inner_->score(q);
    cache_.insert(q, s);
    return s;
  }

  LmBackend *inner_;
  ScoreCache &cache_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

/// Every (history, word) pair the composition of `lat` with an order-n
/// history LM will score, plus the end-of-sentence query at each reachable
/// (final state, history). Sorted, deduplicated.
inline std::vector<LmQuery> collect_queries(const Lattice &lat, int order) {
  std::set<LmQuery> queries;
  auto out = detail::build_adjacency(lat, true);
  std::set<std::pair<StateId, HistoryState>> seen;
  std::vector<std::pair<StateId, HistoryState>> work;
  auto push = [&](StateId s, HistoryState h) {
    if (seen.emplace(s, h).second) work.emplace_back(s, std::move(h));
  };
  push(Lattice::kStart, HistoryState::initial(order));
  while (!work.empty()) {
    auto [s, h] = std::move(work.back());
    work.pop_back();
    if (lat.finals.count(s)) queries.insert(LmQuery{h, kEos});
    for (std::size_t ai : out.of(s)) {
      const Arc &a = lat.arcs[ai];
      if (a.word == kEpsilon) {
        push(a.dst, h);
      } else {
        queries.insert(LmQuery{h, a.word});
        push(a.dst, advance(h, a.word));
      }
    }
  }
  return {queries.begin(), queries.end()};
}

}  // namespace latresc

#endif  // LATRESC_LM_INTERFACE_HPP_
