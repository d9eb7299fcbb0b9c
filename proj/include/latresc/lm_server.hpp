// latresc/lm_server.hpp

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

// Reference scoring server over an ARPA model. "mems" here are stored word
// suffixes: a request scored under mems_id m sees stored(m) ++ context.

#ifndef LATRESC_LM_SERVER_HPP_
#define LATRESC_LM_SERVER_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "latresc/arpa.hpp"
#include "latresc/net.hpp"
#include "latresc/protocol.hpp"

namespace latresc {

struct ServerConfig {
  std::size_t capacity = 1024;  // stored mems
  std::size_t mem_len = 256;    // words kept per mems entry
  std::size_t max_batch = 1024;
};

/// LRU map from server-issued ids to word contexts. Thread-safe. Ids are
/// never reused within the life of the store.
class MemsStore {
 public:
  explicit MemsStore(std::size_t capacity = 1024, std::size_t mem_len = 256)
      : capacity_(capacity), mem_len_(mem_len) {
    if (capacity_ == 0) throw UsageError("mems capacity must be positive");
  }

  /// Stores stored(prior) ++ context, keeping the newest mem_len words.
  std::string save(const protocol::Words &context, const std::optional<std::string> &prior) {
    std::lock_guard<std::mutex> lock(mu_);
    protocol::Words words;
    if (prior) {
      auto it = index_.find(*prior);
      if (it == index_.end()) throw unknown(*prior);
      touch(it->second);
      words = it->second->second;
    }
    words.insert(words.end(), context.begin(), context.end());
    if (words.size() > mem_len_)
      words.erase(words.begin(), words.end() - static_cast<std::ptrdiff_t>(mem_len_));
    std::string id = "m" + std::to_string(++counter_);
    lru_.emplace_front(id, std::move(words));
    index_.emplace(id, lru_.begin());
    while (lru_.size() > capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    return id;
  }

  /// Stored words, refreshing recency. Throws ProtocolError(unknown_mems).
  protocol::Words lookup(const std::string &id) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = index_.find(id);
    if (it == index_.end()) throw unknown(id);
    touch(it->second);
    return it->second->second;
  }

  /// Membership test that leaves recency alone.
  bool contains(const std::string &id) const {
    std::lock_guard<std::mutex> lock(mu_);
    return index_.count(id) > 0;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return lru_.size();
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t mem_len() const { return mem_len_; }

 private:
  using Entry = std::pair<std::string, protocol::Words>;

  void touch(std::list<Entry>::iterator it) { lru_.splice(lru_.begin(), lru_, it); }

  static protocol::ProtocolError unknown(const std::string &id) {
    return protocol::ProtocolError(std::string(protocol::kUnknownMems),
                                   "unknown or evicted mems_id \"" + id + "\"");
  }

  std::size_t capacity_, mem_len_;
  mutable std::mutex mu_;
  std::list<Entry> lru_;  // most recent first
  std::unordered_map<std::string, std::list<Entry>::iterator> index_;
  std::uint64_t counter_ = 0;
};

/// Request handling, independent of transport. Safe to share between
/// connection threads.
class LmService {
 public:
  LmService(const ArpaModel &model, ServerConfig config = {}, std::ostream *log = nullptr)
      : model_(model), config_(config), store_(config.capacity, config.mem_len), log_(log) {}

  const ServerConfig &config() const { return config_; }
  MemsStore &store() { return store_; }

  /// logprob(word | effective context) in nats; an empty context means
  /// sentence start.
  double score(const protocol::Words &stored, const protocol::Words &context,
               const std::string &word) const {
    const std::size_t keep = static_cast<std::size_t>(model_.order() - 1);
    std::vector<ArpaModel::Token> history;
    if (stored.empty() && context.empty()) {
      history.push_back(model_.bos());
    } else {
      // Only the newest order-1 words can matter.
      const std::size_t total = stored.size() + context.size();
      for (std::size_t i = total > keep ? total - keep : 0; i < total; ++i)
        history.push_back(model_.token(i < stored.size() ? stored[i] : context[i - stored.size()]));
    }
    double lp = model_.logprob(history, model_.token(word));
    if (!std::isfinite(lp))
      throw protocol::ProtocolError(std::string(protocol::kBadRequest),
                                    "word \"" + word + "\" cannot be predicted");
    return lp;
  }

  protocol::Message handle(const protocol::Message &request) {
    using namespace protocol;
    try {
      if (auto *r = std::get_if<ScoreRequest>(&request)) {
        Words stored = r->mems_id ? store_.lookup(*r->mems_id) : Words{};
        return ScoreResponse{r->id, score(stored, r->context, r->word)};
      }
      if (auto *r = std::get_if<BatchScoreRequest>(&request)) {
        if (r->items.size() > config_.max_batch)
          throw ProtocolError(std::string(kBatchTooLarge),
                              "batch of " + std::to_string(r->items.size()) + " exceeds max_batch " +
                                  std::to_string(config_.max_batch));
        Words stored = r->common_mems_id ? store_.lookup(*r->common_mems_id) : Words{};
        BatchScoreResponse resp{r->id, {}};
        resp.logprobs.reserve(r->items.size());
        for (const auto &item : r->items) resp.logprobs.push_back(score(stored, item.context, item.word));
        return resp;
      }
      if (auto *r = std::get_if<SaveMemsRequest>(&request))
        return SaveMemsResponse{r->id, store_.save(r->context, r->mems_id)};
      return ErrorResponse{message_id(request), std::string(kBadRequest),
                           "unexpected message type \"" + std::string(type_name(request)) + "\""};
    } catch (const ProtocolError &e) {
      return ErrorResponse{message_id(request), e.code(), e.what()};
    }
  }

  /// Frame in, frame out. Never throws for bad input.
  std::string handle_frame(std::string_view frame) {
    using namespace protocol;
    const auto start = std::chrono::steady_clock::now();
    Message response;
    std::string method = "invalid";
    std::size_t batch_size = 0;
    try {
      Message request = decode(frame);
      method = std::string(type_name(request));
      if (auto *b = std::get_if<BatchScoreRequest>(&request)) batch_size = b->items.size();
      else if (std::holds_alternative<ScoreRequest>(request)) batch_size = 1;
      response = handle(request);
    } catch (const ProtocolError &e) {
      response = ErrorResponse{e.id(), e.code(), e.what()};
    } catch (const std::exception &e) {
      response = ErrorResponse{std::nullopt, std::string(kBadRequest), e.what()};
    }
    std::string out = encode(response);
    if (log_) {
      const auto us = std::chrono::duration_cast<std::chrono::microseconds>(
                          std::chrono::steady_clock::now() - start)
                          .count();
      nlohmann::json line = {{"method", method},
                             {"batch_size", batch_size},
                             {"latency_us", us},
                             {"status", std::holds_alternative<ErrorResponse>(response)
                                            ? std::get<ErrorResponse>(response).code
                                            : std::string("ok")}};
      std::lock_guard<std::mutex> lock(log_mu_);
      *log_ << line.dump() << '\n' << std::flush;
    }
    return out;
  }

 private:
  const ArpaModel &model_;
  ServerConfig config_;
  MemsStore store_;
  std::ostream *log_;
  std::mutex log_mu_;
};

/// Line-oriented TCP server: one thread per connection, requests on a
/// connection answered in order. stop() quits accepting, lets each
/// connection finish the request it is working on, then joins.
class TcpServer {
 public:
  using Handler = std::function<std::string(std::string_view frame)>;

  TcpServer(const net::Address &address, Handler handler)
      : listener_(net::listen_on(address)), handler_(std::move(handler)) {
    address_ = address;
    address_.port = net::bound_port(listener_);
    if (address_.host == "0.0.0.0" || address_.host.empty()) address_.host = "127.0.0.1";
  }

  ~TcpServer() { stop(); }

  TcpServer(const TcpServer &) = delete;
  TcpServer &operator=(const TcpServer &) = delete;

  const net::Address &address() const { return address_; }
  int port() const { return address_.port; }

  void start() {
    if (accept_thread_.joinable()) return;
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  void stop() {
    std::lock_guard<std::mutex> stop_lock(stop_mu_);
    stopping_ = true;
    if (accept_thread_.joinable()) accept_thread_.join();
    std::list<std::unique_ptr<Conn>> conns;
    {
      std::lock_guard<std::mutex> lock(conn_mu_);
      conns.swap(conns_);
    }
    for (auto &c : conns) ::shutdown(c->socket.fd(), SHUT_RD);
    for (auto &c : conns)
      if (c->thread.joinable()) c->thread.join();
    listener_.close();
  }

  std::size_t connections_served() const { return served_.load(); }

 private:
  struct Conn {
    net::Socket socket;
    std::thread thread;
    std::atomic<bool> done{false};
  };

  void accept_loop() {
    while (!stopping_) {
      pollfd p{listener_.fd(), POLLIN, 0};
      int r = ::poll(&p, 1, 50);
      reap();
      if (r <= 0 || !(p.revents & POLLIN)) continue;
      int fd = ::accept4(listener_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
      if (fd < 0) continue;
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      auto conn = std::make_unique<Conn>();
      conn->socket = net::Socket(fd);
      Conn *raw = conn.get();
      std::lock_guard<std::mutex> lock(conn_mu_);
      conns_.push_back(std::move(conn));
      raw->thread = std::thread([this, raw] {
        serve(raw->socket.fd());
        raw->done = true;
      });
      ++served_;
    }
  }

  void serve(int fd) {
    net::LineReader reader(fd);
    std::string line;
    try {
      while (reader.read_line(&line)) net::write_all(fd, handler_(line));
    } catch (const std::exception &) {
      // Peer went away or sent an oversized frame; drop the connection.
    }
  }

  // Joins finished connection threads.
  void reap() {
    std::lock_guard<std::mutex> lock(conn_mu_);
    for (auto it = conns_.begin(); it != conns_.end();) {
      if ((*it)->done) {
        (*it)->thread.join();
        it = conns_.erase(it);
      } else {
        ++it;
      }
    }
  }

  net::Socket listener_;
  net::Address address_;
  Handler handler_;
  std::thread accept_thread_;
  std::atomic<bool> stopping_{false};
  std::mutex stop_mu_, conn_mu_;
  std::list<std::unique_ptr<Conn>> conns_;
  std::atomic<std::size_t> served_{0};
};

/// Service plus TCP front end, as run by `latresc serve`.
class LmServer {
 public:
  LmServer(const ArpaModel &model, const net::Address &address, ServerConfig config = {},
           std::ostream *log = nullptr)
      : service_(model, config, log),
        tcp_(address, [this](std::string_view f) { return service_.handle_frame(f); }) {
    tcp_.start();
  }

  const net::Address &address() const { return tcp_.address(); }
  LmService &service() { return service_; }
  void stop() { tcp_.stop(); }

 private:
  LmService service_;
  TcpServer tcp_;
};

}  // namespace latresc

#endif  // LATRESC_LM_SERVER_HPP_
