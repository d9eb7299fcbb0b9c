// latresc/protocol.hpp

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

// Newline-delimited JSON frames for remote LM scoring. One message per line;
// words travel as strings. encode() emits the canonical form (sorted keys,
// no whitespace, shortest round-trip doubles), so a decoded frame re-encodes
// byte for byte.

#ifndef LATRESC_PROTOCOL_HPP_
#define LATRESC_PROTOCOL_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "latresc/common.hpp"

namespace latresc::protocol {

using RequestId = std::int64_t;
using Words = std::vector<std::string>;

inline constexpr std::string_view kEosWord = "</s>";

// Error codes carried by ErrorResponse.
inline constexpr std::string_view kBadRequest = "bad_request";
inline constexpr std::string_view kUnknownMems = "unknown_mems";
inline constexpr std::string_view kBatchTooLarge = "batch_too_large";

struct ScoreItem {
  Words context;
  std::string word;
  friend bool operator==(const ScoreItem &, const ScoreItem &) = default;
};

struct ScoreRequest {
  RequestId id = 0;
  Words context;
  std::string word;
  std::optional<std::string> mems_id;
  friend bool operator==(const ScoreRequest &, const ScoreRequest &) = default;
};

struct BatchScoreRequest {
  RequestId id = 0;
  std::vector<ScoreItem> items;
  std::optional<std::string> common_mems_id;
  friend bool operator==(const BatchScoreRequest &, const BatchScoreRequest &) = default;
};

struct SaveMemsRequest {
  RequestId id = 0;
  Words context;
  std::optional<std::string> mems_id;
  friend bool operator==(const SaveMemsRequest &, const SaveMemsRequest &) = default;
};

struct ScoreResponse {
  RequestId id = 0;
  double logprob = 0.0;
  friend bool operator==(const ScoreResponse &, const ScoreResponse &) = default;
};

struct BatchScoreResponse {
  RequestId id = 0;
  std::vector<double> logprobs;
  friend bool operator==(const BatchScoreResponse &, const BatchScoreResponse &) = default;
};

struct SaveMemsResponse {
  RequestId id = 0;
  std::string mems_id;
  friend bool operator==(const SaveMemsResponse &, const SaveMemsResponse &) = default;
};

struct ErrorResponse {
  std::optional<RequestId> id;  // null when the request id was unreadable
  std::string code;
  std::string message;
  friend bool operator==(const ErrorResponse &, const ErrorResponse &) = default;
};

using Message = std::variant<ScoreRequest, BatchScoreRequest, SaveMemsRequest, ScoreResponse,
                             BatchScoreResponse, SaveMemsResponse, ErrorResponse>;

/// A frame that could not be decoded. `id` is set when the frame was JSON
/// with a readable integer id, so the peer can still be answered.
class ProtocolError : public DataError {
 public:
  ProtocolError(std::string code, const std::string &what, std::optional<RequestId> id = {})
      : DataError(what), code_(std::move(code)), id_(id) {}
  const std::string &code() const { return code_; }
  std::optional<RequestId> id() const { return id_; }

 private:
  std::string code_;
  std::optional<RequestId> id_;
};

inline std::string_view type_name(const Message &m) {
  static constexpr std::string_view names[] = {"score",    "batch",          "save_mems", "score_resp",
                                               "batch_resp", "save_mems_resp", "error"};
  return names[m.index()];
}

inline std::optional<RequestId> message_id(const Message &m) {
  return std::visit([](const auto &x) -> std::optional<RequestId> { return x.id; }, m);
}

namespace detail {

using nlohmann::json;

inline bool valid_word(const std::string &w) {
  if (w.empty()) return false;
  for (char c : w)
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') return false;
  return true;
}

class Reader {
 public:
  Reader(const json &obj, std::optional<RequestId> id) : obj_(obj), id_(id) {}

  [[noreturn]] void fail(const std::string &what) const {
    throw ProtocolError(std::string(kBadRequest), what, id_);
  }

  const json &field(const char *name) const {
    auto it = obj_.find(name);
    if (it == obj_.end()) fail(std::string("missing field \"") + name + "\"");
    return *it;
  }

  // `where` names the field in diagnostics; `index` >= 0 appends "[index]".
  std::string word(const json &v, std::string_view where, long index = -1) const {
    const std::string *w = v.is_string() ? v.get_ptr<const std::string *>() : nullptr;
    if (!w || !valid_word(*w))
      fail(locate(where, index) + " must be a non-empty string without whitespace");
    return *w;
  }

  Words words(const json &v, std::string_view where) const {
    if (!v.is_array()) fail(std::string(where) + " must be an array of strings");
    Words out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(word(v[i], where, static_cast<long>(i)));
    return out;
  }

  static std::string locate(std::string_view where, long index) {
    std::string out(where);
    if (index >= 0) out += "[" + std::to_string(index) + "]";
    return out;
  }

  std::string string(const char *name) const {
    const json &v = field(name);
    if (!v.is_string()) fail(std::string("field \"") + name + "\" must be a string");
    return v.get<std::string>();
  }

  std::optional<std::string> optional_string(const char *name) const {
    auto it = obj_.find(name);
    if (it == obj_.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) fail(std::string("field \"") + name + "\" must be a string");
    return it->get<std::string>();
  }

  double logprob(const json &v, std::string_view where, long index = -1) const {
    if (!v.is_number()) fail(locate(where, index) + " must be a number");
    double d = v.get<double>();
    if (!std::isfinite(d) || d > 0.0) fail(locate(where, index) + " must be a finite log-probability <= 0");
    return d;
  }

 private:
  const json &obj_;
  std::optional<RequestId> id_;
};

inline std::optional<RequestId> read_id(const json &obj) {
  auto it = obj.find("id");
  if (it == obj.end()) return std::nullopt;
  if (it->is_number_integer()) return it->get<RequestId>();
  return std::nullopt;
}

}  // namespace detail

namespace detail {

// Appends `s` as a JSON string literal, escaped the way nlohmann::json's
// dump() escapes (so frames stay canonical). Non-ASCII text goes through
// the library to get its UTF-8 validation.
inline void append_string(std::string &out, const std::string &s) {
  for (unsigned char c : s)
    if (c >= 0x80) {
      try {
        out += json(s).dump();
      } catch (const json::exception &) {
        throw DataError("cannot encode invalid UTF-8 text");
      }
      return;
    }
  static constexpr char hex[] = "0123456789abcdef";
  out += '"';
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          out += "\\u00";
          out += hex[c >> 4];
          out += hex[c & 15];
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
}

inline void append_words(std::string &out, const Words &ws) {
  out += '[';
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if (i) out += ',';
    append_string(out, ws[i]);
  }
  out += ']';
}

inline void append_double(std::string &out, double d) {
  if (!std::isfinite(d)) throw DataError("cannot encode non-finite logprob");
  out += json(d).dump();
}

}  // namespace detail

/// Canonical frame, LF included: keys sorted, no whitespace, numbers as
/// nlohmann::json prints them.
inline std::string encode(const Message &m) {
  std::string out;
  auto key = [&](const char *k) {
    out += out.size() > 1 ? ",\"" : "\"";
    out += k;
    out += "\":";
  };
  auto id = [&](std::optional<RequestId> v) {
    key("id");
    out += v ? std::to_string(*v) : std::string("null");
  };
  auto type = [&] {
    key("type");
    detail::append_string(out, std::string(type_name(m)));
  };
  out += '{';
  std::visit(
      [&](const auto &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ScoreRequest>) {
          key("context");
          detail::append_words(out, x.context);
          id(x.id);
          if (x.mems_id) {
            key("mems_id");
            detail::append_string(out, *x.mems_id);
          }
          type();
          key("word");
          detail::append_string(out, x.word);
        } else if constexpr (std::is_same_v<T, BatchScoreRequest>) {
          if (x.common_mems_id) {
            key("common_mems_id");
            detail::append_string(out, *x.common_mems_id);
          }
          id(x.id);
          key("items");
          out += '[';
          for (std::size_t i = 0; i < x.items.size(); ++i) {
            out += i ? ",{\"context\":" : "{\"context\":";
            detail::append_words(out, x.items[i].context);
            out += ",\"word\":";
            detail::append_string(out, x.items[i].word);
            out += '}';
          }
          out += ']';
          type();
        } else if constexpr (std::is_same_v<T, SaveMemsRequest>) {
          key("context");
          detail::append_words(out, x.context);
          id(x.id);
          if (x.mems_id) {
            key("mems_id");
            detail::append_string(out, *x.mems_id);
          }
          type();
        } else if constexpr (std::is_same_v<T, ScoreResponse>) {
          id(x.id);
          key("logprob");
          detail::append_double(out, x.logprob);
          type();
        } else if constexpr (std::is_same_v<T, BatchScoreResponse>) {
          id(x.id);
          key("logprobs");
          out += '[';
          for (std::size_t i = 0; i < x.logprobs.size(); ++i) {
            if (i) out += ',';
            detail::append_double(out, x.logprobs[i]);
          }
          out += ']';
          type();
        } else if constexpr (std::is_same_v<T, SaveMemsResponse>) {
          id(x.id);
          key("mems_id");
          detail::append_string(out, x.mems_id);
          type();
        } else {
          key("error");
          out += "{\"code\":";
          detail::append_string(out, x.code);
          out += ",\"message\":";
          detail::append_string(out, x.message);
          out += '}';
          id(x.id);
          type();
        }
      },
      m);
  out += "}\n";
  return out;
}

/// Parses one frame (a trailing LF, optionally preceded by CR, is allowed).
/// Unknown fields are ignored. Throws ProtocolError with code bad_request.
inline Message decode(std::string_view frame) {
  using detail::json;
  if (!frame.empty() && frame.back() == '\n') frame.remove_suffix(1);
  if (!frame.empty() && frame.back() == '\r') frame.remove_suffix(1);
  if (frame.find('\n') != std::string_view::npos)
    throw ProtocolError(std::string(kBadRequest), "frame contains more than one line");
  json j = json::parse(frame, nullptr, false);
  if (j.is_discarded()) throw ProtocolError(std::string(kBadRequest), "malformed JSON");
  if (!j.is_object()) throw ProtocolError(std::string(kBadRequest), "frame is not a JSON object");

  const std::optional<RequestId> id = detail::read_id(j);
  detail::Reader r(j, id);
  const std::string type = r.string("type");
  const json &raw_id = r.field("id");
  if (type == "error") {
    if (!raw_id.is_null() && !raw_id.is_number_integer()) r.fail("field \"id\" must be an integer or null");
  } else if (!raw_id.is_number_integer()) {
    r.fail("field \"id\" must be an integer");
  }

  if (type == "score") {
    ScoreRequest m;
    m.id = *id;
    m.context = r.words(r.field("context"), "context");
    m.word = r.word(r.field("word"), "word");
    m.mems_id = r.optional_string("mems_id");
    return m;
  }
  if (type == "batch") {
    BatchScoreRequest m;
    m.id = *id;
    const json &items = r.field("items");
    if (!items.is_array()) r.fail("items must be an array");
    if (items.empty()) r.fail("items must be non-empty");
    m.items.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (!items[i].is_object()) r.fail(r.locate("items", static_cast<long>(i)) + " must be an object");
      detail::Reader ir(items[i], id);
      ScoreItem item;
      auto ctx = items[i].find("context");
      auto word = items[i].find("word");
      if (ctx == items[i].end() || word == items[i].end())
        r.fail(r.locate("items", static_cast<long>(i)) + " needs \"context\" and \"word\"");
      item.context = ir.words(*ctx, "items[].context");
      item.word = ir.word(*word, "items[].word");
      m.items.push_back(std::move(item));
    }
    m.common_mems_id = r.optional_string("common_mems_id");
    return m;
  }
  if (type == "save_mems") {
    SaveMemsRequest m;
    m.id = *id;
    m.context = r.words(r.field("context"), "context");
    m.mems_id = r.optional_string("mems_id");
    return m;
  }
  if (type == "score_resp") {
    ScoreResponse m;
    m.id = *id;
    m.logprob = r.logprob(r.field("logprob"), "logprob");
    return m;
  }
  if (type == "batch_resp") {
    BatchScoreResponse m;
    m.id = *id;
    const json &lps = r.field("logprobs");
    if (!lps.is_array()) r.fail("logprobs must be an array");
    m.logprobs.reserve(lps.size());
    for (std::size_t i = 0; i < lps.size(); ++i)
      m.logprobs.push_back(r.logprob(lps[i], "logprobs", static_cast<long>(i)));
    return m;
  }
  if (type == "save_mems_resp") {
    SaveMemsResponse m;
    m.id = *id;
    m.mems_id = r.string("mems_id");
    return m;
  }
  if (type == "error") {
    ErrorResponse m;
    m.id = id;
    const json &e = r.field("error");
    if (!e.is_object()) r.fail("field \"error\" must be an object");
    detail::Reader er(e, id);
    m.code = er.string("code");
    m.message = er.string("message");
    return m;
  }
  r.fail("unknown message type \"" + type + "\"");
}

/// One-line canonical description of a message, used by the conformance
/// vectors. Independent of JSON layout.
inline std::string describe(const Message &m) {
  auto words = [](const Words &ws) { return "[" + latresc::detail::join(ws) + "]"; };
  auto opt = [](const std::optional<std::string> &s) { return s ? *s : std::string("-"); };
  std::string out(type_name(m));
  std::visit(
      [&](const auto &x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ErrorResponse>) {
          out += " id=" + (x.id ? std::to_string(*x.id) : std::string("null"));
        } else {
          out += " id=" + std::to_string(x.id);
        }
        if constexpr (std::is_same_v<T, ScoreRequest>) {
          out += " mems=" + opt(x.mems_id) + " context=" + words(x.context) + " word=" + x.word;
        } else if constexpr (std::is_same_v<T, BatchScoreRequest>) {
          out += " mems=" + opt(x.common_mems_id) + " n=" + std::to_string(x.items.size());
          for (const auto &it : x.items) out += " " + words(it.context) + ">" + it.word;
        } else if constexpr (std::is_same_v<T, SaveMemsRequest>) {
          out += " mems=" + opt(x.mems_id) + " context=" + words(x.context);
        } else if constexpr (std::is_same_v<T, ScoreResponse>) {
          out += " logprob=" + latresc::detail::format_shortest(x.logprob);
        } else if constexpr (std::is_same_v<T, BatchScoreResponse>) {
          out += " n=" + std::to_string(x.logprobs.size());
          for (double d : x.logprobs) out += " " + latresc::detail::format_shortest(d);
        } else if constexpr (std::is_same_v<T, SaveMemsResponse>) {
          out += " mems=" + x.mems_id;
        } else {
          out += " code=" + x.code + " message=" + x.message;
        }
      },
      m);
  return out;
}

}  // namespace latresc::protocol

#endif  // LATRESC_PROTOCOL_HPP_
