// latresc/net.hpp

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

// Thin POSIX TCP helpers: address parsing, connect/listen, and LF-framed
// reads and writes.

#ifndef LATRESC_NET_HPP_
#define LATRESC_NET_HPP_

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <string>
#include <string_view>
#include <utility>

#include "latresc/common.hpp"

namespace latresc::net {

struct Address {
  std::string host = "127.0.0.1";
  int port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
};

/// "host:port", ":port" or "port".
inline Address parse_address(std::string_view s) {
  Address a;
  std::string_view port = s;
  if (auto colon = s.rfind(':'); colon != std::string_view::npos) {
    if (colon > 0) a.host = std::string(s.substr(0, colon));
    port = s.substr(colon + 1);
  }
  if (!detail::parse_int(port, &a.port) || a.port < 0 || a.port > 65535)
    throw UsageError("bad address \"" + std::string(s) + "\" (want host:port)");
  return a;
}

inline std::string errno_text() { return std::strerror(errno); }

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket &&o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket &operator=(Socket &&o) noexcept {
    if (this != &o) {
      close();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket &) = delete;
  Socket &operator=(const Socket &) = delete;
  ~Socket() { close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

namespace detail {

inline sockaddr_in resolve(const Address &a) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(static_cast<uint16_t>(a.port));
  if (a.host.empty() || a.host == "0.0.0.0") {
    sa.sin_addr.s_addr = htonl(INADDR_ANY);
    return sa;
  }
  if (inet_pton(AF_INET, a.host.c_str(), &sa.sin_addr) == 1) return sa;
  addrinfo hints{}, *res = nullptr;
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (getaddrinfo(a.host.c_str(), nullptr, &hints, &res) != 0 || !res)
    throw NetworkError("cannot resolve host " + a.host);
  sa.sin_addr = reinterpret_cast<sockaddr_in *>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return sa;
}

inline void set_timeout(int fd, int option, std::chrono::milliseconds t) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(t.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((t.count() % 1000) * 1000);
  ::setsockopt(fd, SOL_SOCKET, option, &tv, sizeof(tv));
}

}  // namespace detail

/// Blocking connect. `io_timeout` bounds every later send/recv.
inline Socket connect_to(const Address &a, std::chrono::milliseconds io_timeout) {
  sockaddr_in sa = detail::resolve(a);
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw NetworkError("socket: " + errno_text());
  detail::set_timeout(s.fd(), SO_RCVTIMEO, io_timeout);
  detail::set_timeout(s.fd(), SO_SNDTIMEO, io_timeout);
  if (::connect(s.fd(), reinterpret_cast<sockaddr *>(&sa), sizeof(sa)) != 0)
    throw NetworkError("connect " + a.str() + ": " + errno_text());
  int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return s;
}

/// Bound, listening socket. Port 0 picks a free port; see bound_port().
inline Socket listen_on(const Address &a, int backlog = 64) {
  sockaddr_in sa = detail::resolve(a);
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw NetworkError("socket: " + errno_text());
  int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(s.fd(), reinterpret_cast<sockaddr *>(&sa), sizeof(sa)) != 0)
    throw NetworkError("bind " + a.str() + ": " + errno_text());
  if (::listen(s.fd(), backlog) != 0) throw NetworkError("listen " + a.str() + ": " + errno_text());
  return s;
}

inline int bound_port(const Socket &s) {
  sockaddr_in sa{};
  socklen_t len = sizeof(sa);
  if (::getsockname(s.fd(), reinterpret_cast<sockaddr *>(&sa), &len) != 0)
    throw NetworkError("getsockname: " + errno_text());
  return ntohs(sa.sin_port);
}

/// Writes the whole buffer or throws.
inline void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetworkError("send: " + errno_text());
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

/// Buffered LF-delimited reader over a socket.
class LineReader {
 public:
  explicit LineReader(int fd, std::size_t max_line = std::size_t{1} << 26)
      : fd_(fd), max_line_(max_line) {}

  /// Next line without its LF. False on clean EOF at a line boundary; a
  /// connection that ends mid-line is an error (no partial frames).
  bool read_line(std::string *line) {
    while (true) {
      if (auto nl = buf_.find('\n', scanned_); nl != std::string::npos) {
        line->assign(buf_, 0, nl);
        buf_.erase(0, nl + 1);
        scanned_ = 0;
        return true;
      }
      scanned_ = buf_.size();
      if (buf_.size() > max_line_) throw NetworkError("frame exceeds size limit");
      char chunk[65536];
      ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK) throw NetworkError("recv: timed out");
        throw NetworkError("recv: " + errno_text());
      }
      if (n == 0) {
        if (buf_.empty()) return false;
        throw NetworkError("connection closed mid-frame");
      }
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::size_t max_line_;
  std::string buf_;
  std::size_t scanned_ = 0;
};

}  // namespace latresc::net

#endif  // LATRESC_NET_HPP_
