// latresc/arpa.hpp

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

#ifndef LATRESC_ARPA_HPP_
#define LATRESC_ARPA_HPP_

#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "latresc/common.hpp"

namespace latresc {

/// Backoff n-gram model read from ARPA text. Scores are natural-log
/// probabilities; the original log10 values are kept for writing back.
class ArpaModel {
 public:
  using Token = std::int32_t;

  struct Entry {
    std::vector<Token> words;  // oldest first, predicted word last
    double log10_prob = 0.0;
    std::optional<double> log10_backoff;
    double prob = 0.0;     // nats; -inf for the `<s>` placeholder (<= -99)
    double backoff = 0.0;  // nats; 0 when absent
  };

  static constexpr double kLn10 = std::numbers::ln10;

  int order() const { return static_cast<int>(tables_.size()); }

  const std::vector<std::string> &vocab() const { return vocab_; }
  std::optional<Token> find_token(std::string_view w) const {
    auto it = token_of_.find(std::string(w));
    if (it == token_of_.end()) return std::nullopt;
    return it->second;
  }
  /// Token for `w`, mapping out-of-vocabulary words to `<unk>`.
  Token token(std::string_view w) const {
    auto t = find_token(w);
    return t ? *t : unk_;
  }
  const std::string &word(Token t) const { return vocab_.at(t); }
  Token bos() const { return bos_; }
  Token eos() const { return eos_; }

  /// Entries of order n (1-based) in file order.
  const std::vector<Entry> &entries(int n) const { return entries_.at(n - 1); }

  const Entry *find(std::span<const Token> ngram) const {
    if (ngram.empty() || static_cast<int>(ngram.size()) > order()) return nullptr;
    const auto &table = tables_[ngram.size() - 1];
    auto it = table.find(key(ngram));
    return it == table.end() ? nullptr : &entries_[ngram.size() - 1][it->second];
  }

  /// Backoff scoring. Histories longer than order-1 are truncated to their
  /// newest order-1 tokens.
  double logprob(std::span<const Token> history, Token word) const {
    std::size_t keep = std::min<std::size_t>(history.size(), order() - 1);
    history = history.subspan(history.size() - keep);
    std::vector<Token> ngram(history.begin(), history.end());
    ngram.push_back(word);
    double acc = 0.0;
    for (std::size_t start = 0;; ++start) {
      std::span<const Token> g(ngram.data() + start, ngram.size() - start);
      if (const Entry *e = find(g)) return acc + e->prob;
      if (g.size() == 1)  // word missing from unigrams; vocab guarantees otherwise
        return -std::numeric_limits<double>::infinity();
      if (const Entry *h = find(g.first(g.size() - 1))) acc += h->backoff;
    }
  }

  double logprob(const std::vector<std::string> &history, std::string_view word) const {
    std::vector<Token> h;
    h.reserve(history.size());
    for (const auto &w : history) h.push_back(token(w));
    return logprob(h, token(word));
  }

  /// Sum of per-word scores from `<s>` through `</s>`.
  double sentence_logprob(const std::vector<std::string> &words) const {
    std::vector<Token> h{bos_};
    double total = 0.0;
    for (const auto &w : words) {
      Token t = token(w);
      total += logprob(h, t);
      h.push_back(t);
    }
    return total + logprob(h, eos_);
  }

  /// Adds an n-gram; used by the parser and by fixture builders.
  /// Throws DataError on a duplicate.
  void add(const std::vector<std::string> &words, double log10_prob,
           std::optional<double> log10_backoff) {
    const std::size_t n = words.size();
    if (n == 0) throw DataError("arpa: empty n-gram");
    if (tables_.size() < n) {
      tables_.resize(n);
      entries_.resize(n);
    }
    Entry e;
    for (const auto &w : words) {
      Token t;
      if (n == 1) {
        auto it = token_of_.find(w);
        if (it == token_of_.end()) {
          t = static_cast<Token>(vocab_.size());
          token_of_.emplace(w, t);
          vocab_.push_back(w);
        } else {
          t = it->second;
        }
      } else {
        auto found = find_token(w);
        if (!found) throw DataError("arpa: word '" + w + "' missing from unigrams");
        t = *found;
      }
      e.words.push_back(t);
    }
    e.log10_prob = log10_prob;
    e.log10_backoff = log10_backoff;
    e.prob = log10_prob <= -99.0 ? -std::numeric_limits<double>::infinity()
                                 : log10_prob * kLn10;
    e.backoff = log10_backoff ? *log10_backoff * kLn10 : 0.0;
    auto k = key(e.words);
    auto &table = tables_[n - 1];
    if (table.count(k)) throw DataError("arpa: duplicate n-gram '" + detail::join(words) + "'");
    table.emplace(std::move(k), entries_[n - 1].size());
    entries_[n - 1].push_back(std::move(e));
  }

  /// Checks the structural invariants after all n-grams are added.
  void finalize() {
    if (tables_.empty()) throw DataError("arpa: no n-grams");
    for (std::size_t n = 0; n < tables_.size(); ++n)
      if (tables_[n].empty())
        throw DataError("arpa: empty " + std::to_string(n + 1) + "-gram section");
    for (const char *w : {"<s>", "</s>", "<unk>"})
      if (!find_token(w)) throw DataError(std::string("arpa: vocabulary lacks ") + w);
    bos_ = *find_token("<s>");
    eos_ = *find_token("</s>");
    unk_ = *find_token("<unk>");
    for (std::size_t n = 1; n < entries_.size(); ++n) {
      for (const Entry &e : entries_[n]) {
        std::span<const Token> prefix(e.words.data(), e.words.size() - 1);
        if (!find(prefix)) {
          std::vector<std::string> ws;
          for (Token t : e.words) ws.push_back(vocab_[t]);
          throw DataError("arpa: n-gram '" + detail::join(ws) + "' has no prefix entry");
        }
      }
    }
  }

 private:
  static std::string key(std::span<const Token> words) {
    return std::string(reinterpret_cast<const char *>(words.data()),
                       words.size() * sizeof(Token));
  }

  std::vector<std::string> vocab_;
  std::unordered_map<std::string, Token> token_of_;
  std::vector<std::unordered_map<std::string, std::size_t>> tables_;
  std::vector<std::vector<Entry>> entries_;
  Token bos_ = 0, eos_ = 0, unk_ = 0;
};

inline ArpaModel parse_arpa(std::istream &in) {
  enum class Where { kPreamble, kData, kSection, kEnd } where = Where::kPreamble;
  std::vector<std::size_t> declared;
  std::vector<std::size_t> seen;
  int section = 0;
  ArpaModel model;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string &msg) {
    throw DataError("arpa line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "\\data\\") {
      where = Where::kData;
      continue;
    }
    if (where == Where::kPreamble) continue;
    if (toks[0] == "\\end\\") {
      where = Where::kEnd;
      break;
    }
    if (toks.size() == 1 && toks[0].size() >= 9 && toks[0].front() == '\\' &&
        toks[0].ends_with("-grams:")) {
      int n = 0;
      if (!detail::parse_int(toks[0].substr(1, toks[0].size() - 8), &n) || n < 1 ||
          n > static_cast<int>(declared.size()))
        fail("unexpected section '" + std::string(toks[0]) + "'");
      section = n;
      where = Where::kSection;
      continue;
    }
    if (where == Where::kData) {
      // ngram N=C
      if (toks.size() != 2 || toks[0] != "ngram") fail("expected 'ngram N=count'");
      auto eq = toks[1].find('=');
      int n = 0;
      std::size_t count = 0;
      if (eq == std::string_view::npos || !detail::parse_int(toks[1].substr(0, eq), &n) ||
          !detail::parse_int(toks[1].substr(eq + 1), &count) ||
          n != static_cast<int>(declared.size()) + 1)
        fail("bad count line '" + line + "'");
      declared.push_back(count);
      seen.push_back(0);
      continue;
    }
    const std::size_t n = static_cast<std::size_t>(section);
    if (toks.size() != n + 1 && toks.size() != n + 2)
      fail("expected " + std::to_string(n) + "-gram entry");
    double lp = 0.0;
    if (!detail::parse_double(toks[0], &lp)) fail("bad log-probability");
    std::optional<double> bo;
    if (toks.size() == n + 2) {
      double b = 0.0;
      if (!detail::parse_double(toks[n + 1], &b)) fail("bad backoff weight");
      bo = b;
    }
    std::vector<std::string> words;
    for (std::size_t i = 1; i <= n; ++i) words.emplace_back(toks[i]);
    try {
      model.add(words, lp, bo);
    } catch (const DataError &e) {
      fail(e.what());
    }
    ++seen[n - 1];
  }
  if (where != Where::kEnd) throw DataError("arpa: missing \\end\\");
  for (std::size_t n = 0; n < declared.size(); ++n)
    if (declared[n] != seen[n])
      throw DataError("arpa: count mismatch for " + std::to_string(n + 1) +
                      "-grams: header says " + std::to_string(declared[n]) + ", found " +
                      std::to_string(seen[n]));
  if (model.order() != static_cast<int>(declared.size()))
    throw DataError("arpa: declared order does not match sections");
  model.finalize();
  return model;
}

inline ArpaModel parse_arpa(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_arpa(in);
}

/// Writes ARPA text with the stored log10 values.
inline std::string write_arpa(const ArpaModel &model) {
  std::string out = "\\data\\\n";
  for (int n = 1; n <= model.order(); ++n)
    out += "ngram " + std::to_string(n) + "=" + std::to_string(model.entries(n).size()) + "\n";
  for (int n = 1; n <= model.order(); ++n) {
    out += "\n\\" + std::to_string(n) + "-grams:\n";
    for (const auto &e : model.entries(n)) {
      out += detail::format_shortest(e.log10_prob);
      out += '\t';
      for (std::size_t i = 0; i < e.words.size(); ++i) {
        if (i) out += ' ';
        out += model.word(e.words[i]);
      }
      if (e.log10_backoff) {
        out += '\t';
        out += detail::format_shortest(*e.log10_backoff);
      }
      out += '\n';
    }
  }
  out += "\n\\end\\\n";
  return out;
}

}  // namespace latresc

#endif  // LATRESC_ARPA_HPP_
