// latresc/conformance.hpp

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

// Generator for the shared wire-protocol conformance vectors:
//   frames.ndjson      canonical frames, one per line
//   frames.desc        describe() of each frame, line for line
//   equivalent.tsv     non-canonical frame <TAB> canonical frame
//   malformed.tsv      expected error code <TAB> frame sent to a server
// A server for the cases in malformed.tsv runs with max_batch 1024 and an
// empty mems store.

#ifndef LATRESC_CONFORMANCE_HPP_
#define LATRESC_CONFORMANCE_HPP_

#include <string>
#include <utility>
#include <vector>

#include "latresc/fixtures.hpp"
#include "latresc/protocol.hpp"

namespace latresc::conformance {

struct Vectors {
  std::vector<protocol::Message> messages;
  std::vector<std::pair<std::string, std::string>> equivalent;  // (variant, canonical)
  std::vector<std::pair<std::string, std::string>> malformed;   // (code, frame)
};

inline std::string strip_lf(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

inline protocol::BatchScoreRequest big_batch(protocol::RequestId id, std::size_t n,
                                             std::uint64_t seed) {
  static const std::vector<std::string> pool = {"so", "does", "sodas", "it", "work",
                                                "is", "the", "are", "cold", "good"};
  fixtures::Rng rng(seed);
  protocol::BatchScoreRequest b;
  b.id = id;
  for (std::size_t i = 0; i < n; ++i) {
    protocol::ScoreItem item;
    if (rng.chance(0.5)) item.context.emplace_back("<s>");
    for (std::size_t k = rng.below(4); k > 0; --k) item.context.push_back(pool[rng.below(pool.size())]);
    item.word = rng.chance(0.1) ? std::string("</s>") : pool[rng.below(pool.size())];
    b.items.push_back(std::move(item));
  }
  return b;
}

inline Vectors generate() {
  using namespace protocol;
  Vectors v;
  auto &m = v.messages;
  m.push_back(ScoreRequest{1, {"<s>", "so"}, "does", std::nullopt});
  m.push_back(ScoreRequest{2, {}, "so", std::nullopt});
  m.push_back(ScoreRequest{3, {"i", "am"}, "</s>", std::string("m1")});
  m.push_back(ScoreRequest{4, {"caf\xc3\xa9", "\"quoted\"", "back\\slash"}, "x", std::nullopt});
  m.push_back(BatchScoreRequest{5, {{{"<s>"}, "so"}, {{"<s>", "so"}, "does"}, {{"so", "does"}, "</s>"}},
                                std::nullopt});
  m.push_back(BatchScoreRequest{6, {{{}, "it"}, {{}, "it"}}, std::string("m7")});
  m.push_back(big_batch(7, 1024, 1024));
  m.push_back(SaveMemsRequest{8, {}, std::nullopt});
  m.push_back(SaveMemsRequest{9, {"hello", "world"}, std::string("m2")});
  m.push_back(ScoreResponse{1, -1.2039728043259361});
  m.push_back(ScoreResponse{2, 0.0});
  m.push_back(ScoreResponse{3, -0.1});
  m.push_back(ScoreResponse{4, -1234.5678e10});
  m.push_back(BatchScoreResponse{5, {-1.3862943611198906, -1.252762968495368, -2.2512917986064953}});
  {
    BatchScoreResponse big{7, {}};
    fixtures::Rng rng(77);
    for (int i = 0; i < 1024; ++i) big.logprobs.push_back(-20.0 * rng.unit());
    m.push_back(std::move(big));
  }
  m.push_back(SaveMemsResponse{8, "m1"});
  m.push_back(ErrorResponse{3, std::string(kUnknownMems), "unknown or evicted mems_id \"m1\""});
  m.push_back(ErrorResponse{std::nullopt, std::string(kBadRequest), "malformed JSON"});
  m.push_back(ErrorResponse{7, std::string(kBatchTooLarge), "batch of 1025 exceeds max_batch 1024"});

  v.equivalent = {
      {R"({ "word": "does", "context": ["<s>", "so"], "type": "score", "id": 1 })",
       R"({"context":["<s>","so"],"id":1,"type":"score","word":"does"})"},
      {R"({"type":"score","id":2,"context":[],"word":"so","mems_id":null,"extra":{"a":[1,2]}})",
       R"({"context":[],"id":2,"type":"score","word":"so"})"},
      {R"({"type":"batch","id":5,"items":[{"word":"so","context":["<s>"],"note":"x"}],"common_mems_id":null})",
       R"({"id":5,"items":[{"context":["<s>"],"word":"so"}],"type":"batch"})"},
      {R"({"type":"score_resp","id":1,"logprob":-1.20397280432593610})",
       R"({"id":1,"logprob":-1.2039728043259361,"type":"score_resp"})"},
      {R"({"type":"score_resp","id":1,"logprob":-5e-1})", R"({"id":1,"logprob":-0.5,"type":"score_resp"})"},
      {R"({"type":"save_mems","id":8,"context":["a"],"mems_id":"m3","trace":true})",
       R"({"context":["a"],"id":8,"mems_id":"m3","type":"save_mems"})"},
      {R"({"type":"error","id":null,"error":{"code":"bad_request","message":"x","detail":1}})",
       R"({"error":{"code":"bad_request","message":"x"},"id":null,"type":"error"})"},
  };

  auto bad = [&](std::string frame) { v.malformed.emplace_back(std::string(kBadRequest), std::move(frame)); };
  bad("not json");
  bad("");
  bad(R"([1,2,3])");
  bad(R"({"id":1,"context":["so"],"word":"does"})");
  bad(R"({"type":"score","context":["so"],"word":"does"})");
  bad(R"({"type":"score","id":"1","context":["so"],"word":"does"})");
  bad(R"({"type":"score","id":1.5,"context":["so"],"word":"does"})");
  bad(R"({"type":"score","id":1,"context":["so"]})");
  bad(R"({"type":"score","id":1,"word":"does"})");
  bad(R"({"type":"score","id":1,"context":"so","word":"does"})");
  bad(R"({"type":"score","id":1,"context":["so",3],"word":"does"})");
  bad(R"({"type":"score","id":1,"context":[""],"word":"does"})");
  bad(R"({"type":"score","id":1,"context":["so does"],"word":"does"})");
  bad(R"({"type":"score","id":1,"context":["so"],"word":""})");
  bad(R"({"type":"score","id":1,"context":["so"],"word":7})");
  bad(R"({"type":"score","id":1,"context":["so"],"word":"does","mems_id":5})");
  bad(R"({"type":"scores","id":1,"context":["so"],"word":"does"})");
  bad(R"({"type":7,"id":1})");
  bad(R"({"type":"batch","id":1,"items":[]})");
  bad(R"({"type":"batch","id":1})");
  bad(R"({"type":"batch","id":1,"items":[{"context":["so"]}]})");
  bad(R"({"type":"batch","id":1,"items":[["so","does"]]})");
  bad(R"({"type":"save_mems","id":1})");
  bad(R"({"type":"save_mems","id":1,"context":["a b"]})");
  // Well-formed responses are not requests.
  bad(R"({"type":"score_resp","id":1,"logprob":-1.0})");
  bad(R"({"type":"score_resp","id":1,"logprob":0.5})");
  bad(R"({"type":"batch_resp","id":1,"logprobs":[-1.0,"x"]})");
  bad(R"({"type":"error","id":1,"error":"oops"})");
  bad(R"({"type":"score","id":1,"context":["<s>"],"word":"<s>"})");

  auto code = [&](std::string_view c, std::string frame) {
    v.malformed.emplace_back(std::string(c), std::move(frame));
  };
  code(kUnknownMems, R"({"type":"score","id":1,"context":["so"],"word":"does","mems_id":"m999999"})");
  code(kUnknownMems, R"({"type":"batch","id":2,"items":[{"context":[],"word":"so"}],"common_mems_id":"nope"})");
  code(kUnknownMems, R"({"type":"save_mems","id":3,"context":["so"],"mems_id":"nope"})");
  code(kBatchTooLarge, strip_lf(encode(big_batch(4, 1025, 1025))));
  return v;
}

/// File name -> contents.
inline std::vector<std::pair<std::string, std::string>> render(const Vectors &v) {
  std::string frames, desc, equivalent, malformed;
  for (const auto &m : v.messages) {
    frames += protocol::encode(m);
    desc += protocol::describe(m) + "\n";
  }
  for (const auto &[a, b] : v.equivalent) equivalent += a + "\t" + b + "\n";
  for (const auto &[c, f] : v.malformed) malformed += c + "\t" + f + "\n";
  return {{"frames.ndjson", frames},
          {"frames.desc", desc},
          {"equivalent.tsv", equivalent},
          {"malformed.tsv", malformed}};
}

}  // namespace latresc::conformance

#endif  // LATRESC_CONFORMANCE_HPP_
