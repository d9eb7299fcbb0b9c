// tests/arpa_test.cpp

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

#include "latresc/arpa.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "latresc/fixtures.hpp"

namespace latresc {
namespace {

using Words = std::vector<std::string>;

ArpaModel bigram() { return parse_arpa(fixtures::kBigramArpa); }

// Every history present in the model's tables, as token sequences.
std::vector<Words> histories(const ArpaModel &m) {
  std::vector<Words> out{{}};
  for (int n = 1; n < m.order(); ++n)
    for (const auto &e : m.entries(n)) {
      Words h;
      for (auto t : e.words) h.push_back(m.word(t));
      if (h.back() != "</s>") out.push_back(h);
    }
  return out;
}

void expect_normalized(const ArpaModel &m) {
  for (const Words &h : histories(m)) {
    double sum = 0.0;
    for (const auto &w : m.vocab())
      if (w != "<s>") sum += std::exp(m.logprob(h, w));
    EXPECT_NEAR(sum, 1.0, 1e-4) << "history size " << h.size();
  }
}

TEST(ArpaTest, ParsesHandBuiltBigram) {
  ArpaModel m = bigram();
  EXPECT_EQ(m.order(), 2);
  EXPECT_EQ(m.vocab().size(), 7u);
  EXPECT_EQ(m.entries(2).size(), 6u);
}

TEST(ArpaTest, ValuesAreConvertedToNats) {
  ArpaModel m = bigram();
  // Frozen from the hand computation in fixtures.hpp.
  EXPECT_NEAR(m.logprob(Words{}, "it"), std::log(3.0 / 13.0), 1e-12);
  EXPECT_NEAR(m.logprob(Words{"so"}, "does"), std::log(2.0 / 7.0), 1e-12);
  EXPECT_NEAR(m.logprob(Words{"<s>"}, "sodas"), std::log(0.25), 1e-12);
}

TEST(ArpaTest, ListedNgramsAreReturnedExactly) {
  ArpaModel m = bigram();
  const auto *uni = m.find(std::vector<ArpaModel::Token>{m.token("sodas")});
  ASSERT_NE(uni, nullptr);
  EXPECT_EQ(m.logprob(Words{}, "sodas"), uni->prob);
  const auto *bi = m.find(std::vector<ArpaModel::Token>{m.token("so"), m.token("does")});
  ASSERT_NE(bi, nullptr);
  EXPECT_EQ(m.logprob(Words{"so"}, "does"), bi->prob);
}

TEST(ArpaTest, UnseenBigramBacksOffToUnk) {
  ArpaModel m = bigram();
  // "xyz" is out of vocabulary -> <unk>; p = bo(so) * p(<unk>) = 65/77 * 1/13.
  const double expected = std::log(65.0 / 77.0) + std::log(1.0 / 13.0);
  EXPECT_NEAR(m.logprob(Words{"so"}, "xyz"), expected, 1e-12);
  // Unlisted history: backoff weight is 0 nats.
  EXPECT_NEAR(m.logprob(Words{"xyz"}, "it"), std::log(3.0 / 13.0), 1e-12);
}

TEST(ArpaTest, BosIsNeverPredictedButBacksOff) {
  ArpaModel m = bigram();
  EXPECT_TRUE(std::isinf(m.logprob(Words{}, "<s>")));
  EXPECT_NEAR(m.logprob(Words{"<s>"}, "it"), std::log(13.0 / 18.0) + std::log(3.0 / 13.0),
              1e-12);
}

TEST(ArpaTest, SentenceLogprob) {
  ArpaModel m = bigram();
  EXPECT_EQ(m.sentence_logprob({}), m.logprob(Words{"<s>"}, "</s>"));
  const double hand = std::log(0.25) + std::log(2.0 / 7.0) + std::log(2.0 / 7.0) +
                      std::log(3.0 / 8.0);
  EXPECT_NEAR(m.sentence_logprob({"so", "does", "it"}), hand, 1e-12);
  Words s{"sodas", "it", "is", "cold"};
  double chain = 0.0;
  Words h{"<s>"};
  for (const auto &w : s) {
    chain += m.logprob(h, w);
    h.push_back(w);
  }
  chain += m.logprob(h, "</s>");
  EXPECT_EQ(m.sentence_logprob(s), chain);
}

TEST(ArpaTest, HistoryIsTruncatedToOrderMinusOne) {
  for (int order : {2, 3, 4}) {
    ArpaModel m = fixtures::toy_lm(order);
    fixtures::Rng rng(order);
    const auto &vocab = m.vocab();
    for (int i = 0; i < 500; ++i) {
      Words h;
      const int len = rng.between(0, 8);
      for (int k = 0; k < len; ++k) h.push_back(vocab[rng.below(vocab.size())]);
      const auto &w = vocab[rng.below(vocab.size())];
      Words tail(h.end() - std::min<std::size_t>(h.size(), order - 1), h.end());
      EXPECT_EQ(m.logprob(h, w), m.logprob(tail, w));
    }
  }
}

TEST(ArpaTest, FixtureModelsAreNormalized) {
  expect_normalized(bigram());
  for (int order : {2, 3, 4}) expect_normalized(fixtures::toy_lm(order));
}

TEST(ArpaTest, EstimatorReproducesHandBuiltBigram) {
  ArpaModel est = fixtures::estimate_backoff_lm(
      fixtures::split_corpus({"so does it", "sodas it"}), 2);
  ArpaModel hand = bigram();
  for (const auto &h : histories(hand)) {
    for (const auto &w : hand.vocab()) {
      if (w != "<s>") {
        EXPECT_NEAR(est.logprob(h, w), hand.logprob(h, w), 1e-12);
      }
    }
  }
}

TEST(ArpaTest, WriteParseRoundTripScoresIdentically) {
  for (const ArpaModel &m : {bigram(), fixtures::toy_lm(4)}) {
    ArpaModel back = parse_arpa(write_arpa(m));
    EXPECT_EQ(back.order(), m.order());
    EXPECT_EQ(write_arpa(back), write_arpa(m));
    for (const auto &h : histories(m))
      for (const auto &w : m.vocab()) EXPECT_EQ(back.logprob(h, w), m.logprob(h, w));
  }
}

TEST(ArpaTest, RejectsCountMismatch) {
  std::string text(fixtures::kBigramArpa);
  text.replace(text.find("ngram 1=7"), 9, "ngram 1=8");
  EXPECT_THROW(parse_arpa(text), DataError);
}

TEST(ArpaTest, RejectsMissingPrefix) {
  std::string text(fixtures::kBigramArpa);
  text.replace(text.find("ngram 2=6"), 9, "ngram 2=7");
  text.replace(text.find("\n\n\\end\\"), 0, "\n-0.5\tit so");
  EXPECT_NO_THROW(parse_arpa(text));
  std::string bad = text;
  bad.replace(bad.find("-0.5\tit so"), 10, "-0.5\tzz so");
  EXPECT_THROW(parse_arpa(bad), DataError);
  // A trigram whose bigram prefix is absent.
  std::string tri =
      "\\data\\\nngram 1=4\nngram 2=1\nngram 3=1\n\n\\1-grams:\n-1\t<s>\n-1\t</s>\n-1\t<unk>\n"
      "-1\ta\n\n\\2-grams:\n-1\t<s> a\n\n\\3-grams:\n-1\ta a a\n\n\\end\\\n";
  EXPECT_THROW(parse_arpa(tri), DataError);
}

TEST(ArpaTest, RejectsDuplicateNgram) {
  std::string text(fixtures::kBigramArpa);
  text.replace(text.find("ngram 2=6"), 9, "ngram 2=7");
  text.replace(text.find("\n\n\\end\\"), 0, "\n-0.5\tso does");
  EXPECT_THROW(parse_arpa(text), DataError);
}

TEST(ArpaTest, RejectsMissingEndAndSpecialWords) {
  std::string text(fixtures::kBigramArpa);
  EXPECT_THROW(parse_arpa(text.substr(0, text.find("\\end\\"))), DataError);
  std::string no_unk =
      "\\data\\\nngram 1=2\n\n\\1-grams:\n-1\t<s>\n-1\t</s>\n\n\\end\\\n";
  EXPECT_THROW(parse_arpa(no_unk), DataError);
}

}  // namespace
}  // namespace latresc
