// latresc/symbol_table.hpp

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

#ifndef LATRESC_SYMBOL_TABLE_HPP_
#define LATRESC_SYMBOL_TABLE_HPP_

#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "latresc/common.hpp"

namespace latresc {

/// Word symbol table in the Kaldi `words.txt` layout (`symbol id` per line).
/// Entries keep file order so that writing reproduces the input.
class SymbolTable {
 public:
  static constexpr std::string_view kEps = "<eps>";
  static constexpr std::string_view kUnk = "<unk>";
  static constexpr std::string_view kBos = "<s>";
  static constexpr std::string_view kEos = "</s>";

  SymbolTable() = default;

  /// Adds an entry; throws DataError on a duplicate symbol or id.
  void add(const std::string &symbol, WordId id) {
    if (id < 0) throw DataError("negative symbol id " + std::to_string(id));
    if (by_symbol_.count(symbol))
      throw DataError("duplicate symbol '" + symbol + "'");
    if (by_id_.count(id))
      throw DataError("duplicate id " + std::to_string(id));
    by_symbol_.emplace(symbol, id);
    by_id_.emplace(id, symbol);
    entries_.emplace_back(symbol, id);
  }

  std::optional<WordId> find(std::string_view symbol) const {
    auto it = by_symbol_.find(std::string(symbol));
    if (it == by_symbol_.end()) return std::nullopt;
    return it->second;
  }

  const std::string *find(WordId id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &it->second;
  }

  WordId id(std::string_view symbol) const {
    auto r = find(symbol);
    if (!r) throw DataError("symbol '" + std::string(symbol) + "' not in table");
    return *r;
  }

  const std::string &symbol(WordId id) const {
    const std::string *s = find(id);
    if (!s) throw DataError("word id " + std::to_string(id) + " not in table");
    return *s;
  }

  /// Id of `<unk>`; tables produced by parse_symbols always have one.
  WordId unk() const { return id(kUnk); }

  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::string, WordId>> &entries() const {
    return entries_;
  }

  friend bool operator==(const SymbolTable &a, const SymbolTable &b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<std::pair<std::string, WordId>> entries_;
  std::unordered_map<std::string, WordId> by_symbol_;
  std::unordered_map<WordId, std::string> by_id_;
};

inline SymbolTable parse_symbols(std::istream &in) {
  SymbolTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 2)
      throw DataError("symbols line " + std::to_string(lineno) +
                      ": expected 'symbol id'");
    WordId id = 0;
    if (!detail::parse_int(toks[1], &id))
      throw DataError("symbols line " + std::to_string(lineno) +
                      ": non-integer id '" + std::string(toks[1]) + "'");
    try {
      table.add(std::string(toks[0]), id);
    } catch (const DataError &e) {
      throw DataError("symbols line " + std::to_string(lineno) + ": " +
                      e.what());
    }
  }
  auto eps = table.find(SymbolTable::kEps);
  if (!eps || *eps != kEpsilon) throw DataError("symbols: missing '<eps> 0'");
  if (!table.find(SymbolTable::kUnk)) throw DataError("symbols: missing '<unk>'");
  return table;
}

inline SymbolTable parse_symbols(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_symbols(in);
}

inline std::string write_symbols(const SymbolTable &table) {
  std::string out;
  for (const auto &[sym, id] : table.entries()) {
    out += sym;
    out += ' ';
    out += std::to_string(id);
    out += '\n';
  }
  return out;
}

}  // namespace latresc

#endif  // LATRESC_SYMBOL_TABLE_HPP_
