// latresc/remote_client.hpp

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

// LmBackend over the wire protocol, plus the batched prefetch flow and
// per-conversation memory.

#ifndef LATRESC_REMOTE_CLIENT_HPP_
#define LATRESC_REMOTE_CLIENT_HPP_

#include <algorithm>
#include <chrono>
#include <deque>
#include <iostream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "latresc/lattice.hpp"
#include "latresc/lm_interface.hpp"
#include "latresc/net.hpp"
#include "latresc/protocol.hpp"
#include "latresc/symbol_table.hpp"

namespace latresc {

struct ClientOptions {
  net::Address address;
  std::size_t max_batch = 1024;  // chunk size for prefetch; match the server
  int retries = 3;               // reconnect attempts after the first failure
  std::chrono::milliseconds backoff{50};  // doubled after each retry
  std::chrono::milliseconds io_timeout{30000};
  std::size_t window = 8;  // pipelined requests in flight
  bool chain_mems = false;  // extend the prior memory instead of replacing it
  std::ostream *warnings = &std::cerr;
};

struct SessionState {
  std::string session_id;
  std::optional<std::string> current_mems_id;
};

/// The server answered with an error frame.
class RemoteError : public DataError {
 public:
  RemoteError(std::string code, const std::string &what)
      : DataError("server error " + code + ": " + what), code_(std::move(code)) {}
  const std::string &code() const { return code_; }

 private:
  std::string code_;
};

/// One client connection. Requests are pipelined and matched to responses
/// by id; a dropped connection is retried with exponential backoff, redoing
/// the whole exchange.
class Connection {
 public:
  explicit Connection(ClientOptions options) : options_(std::move(options)) {}

  const ClientOptions &options() const { return options_; }

  /// Responses in request order. Request ids are assigned here.
  std::vector<protocol::Message> exchange(std::vector<protocol::Message> requests) {
    for (auto &r : requests) {
      const protocol::RequestId id = ++next_id_;
      std::visit([&](auto &m) { m.id = id; }, r);
    }
    std::string last_error;
    auto delay = options_.backoff;
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
      try {
        if (!socket_.valid()) {
          socket_ = net::connect_to(options_.address, options_.io_timeout);
          reader_.emplace(socket_.fd());
        }
        return run(requests);
      } catch (const NetworkError &e) {
        last_error = e.what();
        socket_.close();
        reader_.reset();
      }
    }
    throw NetworkError("LM server " + options_.address.str() + " unreachable after " +
                       std::to_string(options_.retries) + " retries: " + last_error);
  }

  protocol::Message call(protocol::Message request) {
    return std::move(exchange({std::move(request)}).front());
  }

  std::size_t requests_sent() const { return sent_; }

 private:
  std::vector<protocol::Message> run(const std::vector<protocol::Message> &requests) {
    std::unordered_map<protocol::RequestId, std::size_t> slot;
    for (std::size_t i = 0; i < requests.size(); ++i)
      slot.emplace(*protocol::message_id(requests[i]), i);
    std::vector<std::optional<protocol::Message>> got(requests.size());
    std::size_t next = 0, received = 0;
    std::string line;
    while (received < requests.size()) {
      while (next < requests.size() && next - received < std::max<std::size_t>(1, options_.window)) {
        net::write_all(socket_.fd(), protocol::encode(requests[next++]));
        ++sent_;
      }
      if (!reader_->read_line(&line)) throw NetworkError("connection closed by server");
      protocol::Message m = protocol::decode(line);
      auto id = protocol::message_id(m);
      if (auto *e = std::get_if<protocol::ErrorResponse>(&m); e && !id)
        throw RemoteError(e->code, e->message);
      auto it = id ? slot.find(*id) : slot.end();
      if (it == slot.end() || got[it->second])
        throw DataError("unexpected response id from LM server");
      got[it->second] = std::move(m);
      ++received;
    }
    std::vector<protocol::Message> out;
    out.reserve(got.size());
    for (auto &m : got) {
      if (auto *e = std::get_if<protocol::ErrorResponse>(&*m)) throw RemoteError(e->code, e->message);
      out.push_back(std::move(*m));
    }
    return out;
  }

  ClientOptions options_;
  net::Socket socket_;
  std::optional<net::LineReader> reader_;
  protocol::RequestId next_id_ = 0;
  std::size_t sent_ = 0;
};

class RemoteBackend : public LmBackend {
 public:
  RemoteBackend(ClientOptions options, const SymbolTable &symbols)
      : conn_(std::move(options)), symbols_(symbols) {}

  using LmBackend::score;

  double score(const HistoryState &history, WordId word) override {
    return single(history, symbols_.symbol(word));
  }

  double score_final(const HistoryState &history) override {
    return single(history, std::string(protocol::kEosWord));
  }

  /// Starts (or continues) a conversation. A new id drops the memory.
  void session_begin(const std::string &session_id) override {
    if (session_id != session_.session_id) {
      session_.session_id = session_id;
      session_.current_mems_id.reset();
    }
  }

  /// Saves the committed best path as the next utterance's memory. Best
  /// effort: on failure the memory stays as it was and a warning is printed.
  void session_commit(std::span<const WordId> best_words) override {
    protocol::SaveMemsRequest req;
    const bool chain = conn_.options().chain_mems && session_.current_mems_id;
    try {
      if (!chain) req.context.emplace_back(SymbolTable::kBos);
      for (WordId w : best_words) req.context.push_back(symbols_.symbol(w));
      if (chain) req.mems_id = session_.current_mems_id;
      auto resp = conn_.call(req);
      session_.current_mems_id = std::get<protocol::SaveMemsResponse>(resp).mems_id;
    } catch (const Error &e) {
      ++commit_failures_;
      if (conn_.options().warnings)
        *conn_.options().warnings << "warning: session " << session_.session_id
                                  << ": could not save memory (" << e.what()
                                  << "); continuing with previous memory\n";
    }
  }

  /// Scores every query of `lat` at `order` in pipelined batches of at most
  /// max_batch items and returns a frozen strict cache. All or nothing.
  ScoreCache prefetch(const Lattice &lat, int order) {
    std::vector<LmQuery> queries = collect_queries(lat, order);
    std::vector<protocol::Message> requests;
    const std::size_t chunk = std::max<std::size_t>(1, conn_.options().max_batch);
    for (std::size_t begin = 0; begin < queries.size(); begin += chunk) {
      protocol::BatchScoreRequest req;
      req.common_mems_id = session_.current_mems_id;
      for (std::size_t i = begin; i < std::min(queries.size(), begin + chunk); ++i)
        req.items.push_back(item(queries[i]));
      requests.push_back(std::move(req));
    }
    ScoreCache cache(true);
    if (!requests.empty()) {
      auto responses = conn_.exchange(std::move(requests));
      std::size_t q = 0;
      for (const auto &r : responses) {
        const auto &lps = std::get<protocol::BatchScoreResponse>(r).logprobs;
        const std::size_t want = std::min(chunk, queries.size() - q);
        if (lps.size() != want) throw DataError("batch response length does not match request");
        for (double lp : lps) cache.insert(queries[q++], lp);
      }
    }
    cache.freeze();
    return cache;
  }

  /// Wire form of a history: `<s>` leads a sentence-start history unless a
  /// memory is attached, in which case the memory stands in for it.
  protocol::Words wire_context(const HistoryState &h) const {
    protocol::Words out;
    out.reserve(h.words.size());
    for (WordId w : h.words) {
      if (w == kBos) {
        if (!session_.current_mems_id) out.emplace_back(SymbolTable::kBos);
      } else {
        out.push_back(symbols_.symbol(w));
      }
    }
    return out;
  }

  const SessionState &session() const { return session_; }
  std::size_t commit_failures() const { return commit_failures_; }
  std::size_t requests_sent() const { return conn_.requests_sent(); }

 private:
  protocol::ScoreItem item(const LmQuery &q) const {
    protocol::ScoreItem it;
    it.context = wire_context(q.history);
    it.word = q.is_final() ? std::string(protocol::kEosWord) : symbols_.symbol(q.word);
    return it;
  }

  double single(const HistoryState &history, std::string word) {
    protocol::ScoreRequest req;
    req.context = wire_context(history);  // symbol lookups fail before any I/O
    req.word = std::move(word);
    req.mems_id = session_.current_mems_id;
    return std::get<protocol::ScoreResponse>(conn_.call(std::move(req))).logprob;
  }

  Connection conn_;
  const SymbolTable &symbols_;
  SessionState session_;
  std::size_t commit_failures_ = 0;
};

inline ScoreCache batch_prefetch(const Lattice &lat, int order, RemoteBackend &backend) {
  return backend.prefetch(lat, order);
}

}  // namespace latresc

#endif  // LATRESC_REMOTE_CLIENT_HPP_
