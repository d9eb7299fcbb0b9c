// tests/wer_test.cpp

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

#include "latresc/wer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <string>
#include <tuple>

#include "latresc/fixtures.hpp"
#include "latresc/lattice_io.hpp"
#include "latresc/rescore.hpp"
#include "oracles.hpp"

namespace latresc {
namespace {

using Words = std::vector<std::string>;

Words w(std::string_view s) {
  Words out;
  for (auto t : detail::split_ws(s)) out.emplace_back(t);
  return out;
}

TEST(WerTest, IdenticalIsZero) {
  WerCounts c = wer(w("so does it"), w("so does it"));
  EXPECT_EQ(c.errors(), 0u);
  EXPECT_EQ(c.rate(), 0.0);
}

TEST(WerTest, OneSubstitutionInThree) {
  WerCounts c = wer(w("so does at"), w("so does it"));
  EXPECT_EQ(c.substitutions, 1u);
  EXPECT_EQ(c.reference_length, 3u);
  EXPECT_DOUBLE_EQ(c.rate(), 1.0 / 3.0);
}

TEST(WerTest, InsertionsAndDeletions) {
  WerCounts c = wer(w("so so does it it"), w("so does it"));
  EXPECT_EQ(c.insertions, 2u);
  EXPECT_EQ(c.errors(), 2u);
  c = wer(w("it"), w("so does it"));
  EXPECT_EQ(c.deletions, 2u);
  c = wer(Words{}, w("so does"));
  EXPECT_EQ(c.deletions, 2u);
  EXPECT_DOUBLE_EQ(c.rate(), 1.0);
  // More errors than reference words is allowed.
  EXPECT_DOUBLE_EQ(wer(w("a b c d"), w("x")).rate(), 4.0);
}

TEST(WerTest, EmptyReferenceIsAnError) {
  EXPECT_THROW(wer(w("so"), Words{}), DataError);
  EXPECT_THROW(WerCounts{}.rate(), DataError);
  // align itself accepts it
  EXPECT_EQ(align(w("so does"), Words{}).insertions, 2u);
}

TEST(WerTest, MatchesLevenshteinOracle) {
  fixtures::Rng rng(21);
  for (int i = 0; i < 2000; ++i) {
    std::vector<int> hyp(rng.below(9)), ref(1 + rng.below(8));
    for (int &x : hyp) x = static_cast<int>(rng.below(4));
    for (int &x : ref) x = static_cast<int>(rng.below(4));
    WerCounts c = wer(hyp, ref);
    EXPECT_EQ(c.errors(), testing::edit_distance(hyp, ref));
    EXPECT_EQ(c.reference_length, ref.size());
    // Counts must describe an actual alignment.
    EXPECT_EQ(hyp.size() + c.deletions, ref.size() + c.insertions);
  }
}

TEST(WerTest, CorpusAggregatesCounts) {
  // 10 reference words, 1 error in total.
  std::vector<std::pair<Words, Words>> pairs = {
      {w("so does it work"), w("so does it work")},
      {w("so does at"), w("so does it")},
      {w("it is good"), w("it is good")},
  };
  WerCounts c = score_corpus(pairs);
  EXPECT_EQ(c.reference_length, 10u);
  EXPECT_EQ(c.errors(), 1u);
  EXPECT_DOUBLE_EQ(c.rate(), 0.1);
}

TEST(WerTest, CorpusIsPermutationInvariant) {
  fixtures::Rng rng(22);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::pair<std::vector<int>, std::vector<int>>> pairs(1 + rng.below(6));
    for (auto &[h, r] : pairs) {
      h.resize(rng.below(6));
      r.resize(1 + rng.below(6));
      for (int &x : h) x = static_cast<int>(rng.below(3));
      for (int &x : r) x = static_cast<int>(rng.below(3));
    }
    WerCounts a = score_corpus(pairs);
    std::reverse(pairs.begin(), pairs.end());
    std::rotate(pairs.begin(), pairs.begin() + rng.below(pairs.size()), pairs.end());
    WerCounts b = score_corpus(pairs);
    EXPECT_EQ(a.errors(), b.errors());
    EXPECT_EQ(a.reference_length, b.reference_length);
  }
}

TEST(OracleTest, FixtureReferences) {
  Lattice lat = parse_lattice(fixtures::kSodasLattice);
  OraclePath o = oracle_path(lat, {2, 3});  // "so does"
  EXPECT_EQ(o.distance, 0u);
  EXPECT_EQ(o.path.words, (std::vector<WordId>{2, 3}));
  o = oracle_path(lat, {4});  // "sodas"
  EXPECT_EQ(o.distance, 0u);
  EXPECT_EQ(o.path.words, (std::vector<WordId>{4}));
  // "so does" vs "sodas": 2 edits, "sodas" vs "sodas": 0. Reference "sodas it"
  // is one deletion away from the sodas path.
  o = oracle_path(lat, {4, 5});
  EXPECT_EQ(o.distance, 1u);
  EXPECT_EQ(o.counts.deletions, 1u);
  EXPECT_EQ(o.path.words, (std::vector<WordId>{4}));
}

TEST(OracleTest, MatchesBruteForce) {
  fixtures::Rng rng(23);
  fixtures::RandomLatticeOptions opt;
  opt.dyadic_costs = true;
  opt.max_states = 9;
  for (int i = 0; i < 400; ++i) {
    Lattice lat = fixtures::random_lattice(rng, {2, 3, 4, 5}, opt, "o");
    std::vector<WordId> ref(1 + rng.below(6));
    for (WordId &x : ref) x = 2 + static_cast<WordId>(rng.below(4));
    auto paths = enumerate_paths(lat, 1000).paths;
    const Path *want = nullptr;
    std::size_t want_d = 0;
    for (const Path &p : paths) {
      std::size_t d = testing::edit_distance(p.words, ref);
      auto key = [&](const Path &q, std::size_t dq) {
        return std::make_tuple(dq, q.total(1.0), q.words);
      };
      if (!want || key(p, d) < key(*want, want_d)) {
        want = &p;
        want_d = d;
      }
    }
    OraclePath got = oracle_path(lat, ref);
    EXPECT_EQ(got.distance, want_d) << write_lattice(lat);
    EXPECT_EQ(got.path.words, want->words) << write_lattice(lat);
    EXPECT_EQ(got.path.total(1.0), want->total(1.0));
    EXPECT_EQ(got.counts.errors(), got.distance);
  }
}

TEST(OracleTest, NeverWorseThanBestPathAndZeroWhenEmbedded) {
  fixtures::Rng rng(24);
  for (int i = 0; i < 300; ++i) {
    Lattice lat = fixtures::random_lattice(rng, fixtures::arc_words(), {}, "e");
    std::vector<WordId> ref(1 + rng.below(5));
    for (WordId &x : ref) x = fixtures::arc_words()[rng.below(fixtures::arc_words().size())];
    OraclePath o = oracle_path(lat, ref);
    for (double scale : {0.0, 1.0, 7.5}) {
      EXPECT_LE(o.distance, testing::edit_distance(best_path(lat, scale).words, ref));
    }
    // Any path's own words are an embedded reference.
    auto paths = enumerate_paths(lat, 1000).paths;
    const Path &p = paths[rng.below(paths.size())];
    if (!p.words.empty()) {
      EXPECT_EQ(oracle_path(lat, p.words).distance, 0u);
    }
  }
}

}  // namespace
}  // namespace latresc
