// latresc/commands.hpp

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

// The operations behind the `latresc` subcommands. Each throws latresc::Error
// on failure; tools/latresc.cpp maps the error kind to an exit code.

#ifndef LATRESC_COMMANDS_HPP_
#define LATRESC_COMMANDS_HPP_

#include <signal.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "latresc/arpa.hpp"
#include "latresc/fixtures.hpp"
#include "latresc/lattice_io.hpp"
#include "latresc/lm_interface.hpp"
#include "latresc/lm_server.hpp"
#include "latresc/manifest.hpp"
#include "latresc/remote_client.hpp"
#include "latresc/rescore.hpp"
#include "latresc/symbol_table.hpp"
#include "latresc/wer.hpp"

namespace latresc {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path &path, const std::string &text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

inline SymbolTable load_symbols(const fs::path &path) {
  try {
    return parse_symbols(read_file(path));
  } catch (const DataError &e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline ArpaModel load_arpa(const fs::path &path) {
  try {
    return parse_arpa(read_file(path));
  } catch (const DataError &e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

/// The lattice named `utt_id` in `path` (files may hold several).
inline Lattice load_lattice(const fs::path &path, const std::string &utt_id) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lattice file " + path.string());
  try {
    for (auto &lat : parse_lattices(in))
      if (lat.utt_id == utt_id) return std::move(lat);
  } catch (const DataError &e) {
    throw DataError(path.string() + ": " + e.what());
  }
  throw DataError(path.string() + ": no lattice for utterance " + utt_id);
}

// ---------------------------------------------------------------- rescore

struct RescoreOptions {
  fs::path manifest;
  fs::path symbols;
  int order = 3;
  std::optional<fs::path> arpa;          // local backend
  std::optional<std::string> remote;     // host:port
  std::string mode = "sequential";       // or "batch"
  double lm_scale = 1.0;
  bool mems = false;
  bool mems_chain = false;
  fs::path output_dir;
  std::size_t jobs = 1;
  std::size_t max_batch = 1024;
  std::ostream *log = &std::cerr;
};

struct UtteranceResult {
  std::string session_id;
  std::string utt_id;
  Path best;
  std::vector<std::string> words;
  std::size_t states = 0, arcs = 0;
  double seconds = 0.0;
};

inline std::vector<UtteranceResult> run_rescore(const RescoreOptions &opt) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  if (opt.arpa.has_value() == opt.remote.has_value())
    throw UsageError("give exactly one of --arpa and --remote");
  if (opt.mode != "sequential" && opt.mode != "batch")
    throw UsageError("--mode must be sequential or batch");
  if (opt.order < 2) throw UsageError("--order must be >= 2");
  if (opt.mems && !opt.remote) throw UsageError("--mems needs a remote backend");
  if (opt.jobs == 0) throw UsageError("--jobs must be positive");

  const SymbolTable symbols = load_symbols(opt.symbols);
  const Manifest manifest = read_manifest(opt.manifest);
  std::optional<ArpaModel> model;
  if (opt.arpa) model = load_arpa(*opt.arpa);
  std::optional<net::Address> address;
  if (opt.remote) address = net::parse_address(*opt.remote);

  // Contiguous session groups, processed in parallel; utterances within one
  // in manifest order.
  std::vector<std::pair<std::size_t, std::size_t>> sessions;
  for (std::size_t i = 0; i < manifest.size(); ++i)
    if (i == 0 || manifest[i].session_id != manifest[i - 1].session_id)
      sessions.emplace_back(i, i + 1);
    else
      sessions.back().second = i + 1;

  fs::create_directories(opt.output_dir / "lattices");
  std::vector<UtteranceResult> results(manifest.size());
  std::atomic<std::size_t> next_session{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::optional<Error> first_error;

  auto worker = [&] {
    while (!failed) {
      const std::size_t s = next_session++;
      if (s >= sessions.size()) return;
      std::unique_ptr<LmBackend> backend;
      RemoteBackend *remote = nullptr;
      if (model) {
        backend = std::make_unique<ArpaBackend>(*model, symbols);
      } else {
        ClientOptions co;
        co.address = *address;
        co.max_batch = opt.max_batch;
        co.chain_mems = opt.mems_chain;
        co.warnings = opt.log;
        auto r = std::make_unique<RemoteBackend>(co, symbols);
        remote = r.get();
        backend = std::move(r);
      }
      for (std::size_t i = sessions[s].first; i < sessions[s].second && !failed; ++i) {
        const ManifestRecord &rec = manifest[i];
        try {
          const auto t = Clock::now();
          Lattice lat = load_lattice(rec.lattice_path, rec.utt_id);
          if (opt.mems) backend->session_begin(rec.session_id);
          Lattice out;
          if (opt.mode == "sequential") {
            out = rescore(lat, *backend, opt.order, &symbols);
          } else {
            ScoreCache cache(true);
            if (remote) {
              cache = remote->prefetch(lat, opt.order);
            } else {
              for (const LmQuery &q : collect_queries(lat, opt.order))
                cache.insert(q, backend->score(q));
              cache.freeze();
            }
            CachedBackend cached(nullptr, cache);
            out = rescore(lat, cached, opt.order, &symbols);
          }
          UtteranceResult &r = results[i];
          r.session_id = rec.session_id;
          r.utt_id = rec.utt_id;
          r.best = best_path(out, opt.lm_scale);
          for (WordId w : r.best.words) r.words.push_back(symbols.symbol(w));
          r.states = static_cast<std::size_t>(out.num_states);
          r.arcs = out.arcs.size();
          write_file(opt.output_dir / "lattices" / (rec.utt_id + ".lat"), write_lattice(out));
          if (opt.mems) backend->session_commit(r.best.words);
          r.seconds = std::chrono::duration<double>(Clock::now() - t).count();
        } catch (const Error &e) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!first_error) first_error = Error(e.kind(), "utterance " + rec.utt_id + ": " + e.what());
          failed = true;
        }
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n = std::min(opt.jobs, std::max<std::size_t>(1, sessions.size()));
  for (std::size_t j = 1; j < n; ++j) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();
  if (first_error) throw *first_error;

  Transcript transcript;
  nlohmann::json utts = nlohmann::json::array();
  for (const auto &r : results) {
    transcript.push_back({r.utt_id, r.words});
    utts.push_back({{"session_id", r.session_id},
                    {"utt_id", r.utt_id},
                    {"best_total", r.best.total(opt.lm_scale)},
                    {"best_lm_cost", r.best.lm_cost},
                    {"best_ac_cost", r.best.ac_cost},
                    {"num_words", r.words.size()},
                    {"num_states", r.states},
                    {"num_arcs", r.arcs},
                    {"seconds", r.seconds}});
  }
  std::ostringstream ts;
  write_transcript(ts, transcript);
  write_file(opt.output_dir / "transcript.txt", ts.str());
  nlohmann::json summary = {
      {"backend", model ? "local" : "remote"},
      {"mode", opt.mode},
      {"order", opt.order},
      {"lm_scale", opt.lm_scale},
      {"mems", opt.mems},
      {"utterances", std::move(utts)},
      {"total_seconds", std::chrono::duration<double>(Clock::now() - t0).count()}};
  write_file(opt.output_dir / "summary.json", summary.dump(2) + "\n");
  return results;
}

// ---------------------------------------------------------------- wer

inline std::string percent(std::size_t errors, std::size_t ref_len) {
  if (ref_len == 0) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * static_cast<double>(errors) / ref_len);
  return buf;
}

inline std::string wer_line(const std::string &label, const WerCounts &c) {
  return "%WER " + label + percent(c.errors(), c.reference_length) + " [ " +
         std::to_string(c.errors()) + " / " + std::to_string(c.reference_length) + ", " +
         std::to_string(c.insertions) + " ins, " + std::to_string(c.deletions) + " del, " +
         std::to_string(c.substitutions) + " sub ]";
}

/// Per-utterance counts, then the aggregate; utterances in reference order.
inline WerCounts run_wer(const fs::path &hyp_path, const fs::path &ref_path, std::ostream &out) {
  Transcript hyp = read_transcript(hyp_path), ref = read_transcript(ref_path);
  std::map<std::string, const std::vector<std::string> *> hyp_of;
  for (const auto &h : hyp) hyp_of[h.utt_id] = &h.words;
  for (const auto &r : ref)
    if (!hyp_of.count(r.utt_id)) throw DataError("utterance " + r.utt_id + " missing from hypotheses");
  if (hyp.size() != ref.size()) {
    std::set<std::string> refs;
    for (const auto &r : ref) refs.insert(r.utt_id);
    for (const auto &h : hyp)
      if (!refs.count(h.utt_id)) throw DataError("utterance " + h.utt_id + " missing from references");
  }
  WerCounts total;
  for (const auto &r : ref) {
    WerCounts c = align(*hyp_of[r.utt_id], r.words);
    total += c;
    out << r.utt_id << " S=" << c.substitutions << " I=" << c.insertions << " D=" << c.deletions
        << " N=" << c.reference_length << " " << percent(c.errors(), c.reference_length) << "%\n";
  }
  if (total.reference_length == 0) throw DataError("references contain no words");
  out << wer_line("", total) << "\n";
  return total;
}

// ---------------------------------------------------------------- oracle

struct OracleReport {
  WerCounts oracle, best;
};

/// Oracle and best-path (at `lm_scale`) WER over a manifest with references.
inline OracleReport run_oracle(const fs::path &manifest_path, const fs::path &symbols_path,
                               double lm_scale, std::ostream &out) {
  const SymbolTable symbols = load_symbols(symbols_path);
  const Manifest manifest = read_manifest(manifest_path);
  OracleReport rep;
  std::map<std::string, WordId> oov;  // reference words no lattice can contain
  for (const auto &rec : manifest) {
    if (!rec.reference) throw DataError("utterance " + rec.utt_id + " has no reference");
    if (rec.reference->empty()) throw DataError("utterance " + rec.utt_id + " has an empty reference");
    std::vector<WordId> ref;
    for (const auto &w : *rec.reference) {
      if (auto id = symbols.find(w)) {
        ref.push_back(*id);
      } else {
        auto it = oov.emplace(w, -1000 - static_cast<WordId>(oov.size())).first;
        ref.push_back(it->second);
      }
    }
    Lattice lat = load_lattice(rec.lattice_path, rec.utt_id);
    OraclePath o = oracle_path(lat, ref);
    WerCounts b = align(best_path(lat, lm_scale).words, ref);
    rep.oracle += o.counts;
    rep.best += b;
    out << rec.utt_id << " oracle=" << o.counts.errors() << " best=" << b.errors()
        << " N=" << ref.size() << "\n";
  }
  if (rep.oracle.reference_length == 0) throw DataError("manifest has no utterances");
  out << wer_line("oracle ", rep.oracle) << "\n";
  out << wer_line("best ", rep.best) << "\n";
  const bool bound = rep.oracle.errors() <= rep.best.errors();
  out << "oracle <= best: " << (bound ? "yes" : "NO") << "\n";
  if (!bound) throw DataError("oracle WER exceeds best-path WER");
  return rep;
}

// ---------------------------------------------------------------- serve

struct ServeOptions {
  fs::path model;
  std::string address = "127.0.0.1:5050";
  ServerConfig config;
  bool quiet = false;
};

/// Runs until SIGINT or SIGTERM, then drains and returns.
inline void run_serve(const ServeOptions &opt) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  // Block before any thread starts so only sigwait sees these.
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  const ArpaModel model = load_arpa(opt.model);
  LmServer server(model, net::parse_address(opt.address), opt.config, opt.quiet ? nullptr : &std::cerr);
  std::cerr << nlohmann::json{{"event", "listening"}, {"address", server.address().str()}}.dump()
            << std::endl;
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  std::cerr << nlohmann::json{{"event", "shutdown"}, {"signal", sig}}.dump() << std::endl;
}

// ---------------------------------------------------------------- bench

struct BenchRow {
  std::size_t batch_size = 0;
  double total_us = 0.0;
  std::optional<double> incremental_us;
};

/// "1,16:256:16" style lists: single sizes or start:end:step ranges.
inline std::vector<std::size_t> parse_sizes(std::string_view text) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string_view part = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    std::size_t a = 0, b = 0, step = 1;
    auto c1 = part.find(':');
    bool ok;
    if (c1 == part.npos) {
      ok = detail::parse_int(part, &a);
      b = a;
    } else {
      auto c2 = part.find(':', c1 + 1);
      ok = detail::parse_int(part.substr(0, c1), &a) &&
           detail::parse_int(part.substr(c1 + 1, c2 == part.npos ? part.npos : c2 - c1 - 1), &b) &&
           (c2 == part.npos || detail::parse_int(part.substr(c2 + 1), &step));
    }
    if (!ok || a == 0 || b < a || step == 0)
      throw UsageError("bad batch size list \"" + std::string(text) + "\"");
    for (std::size_t x = a; x <= b; x += step) out.push_back(x);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (!std::is_sorted(out.begin(), out.end()) ||
      std::adjacent_find(out.begin(), out.end()) != out.end())
    throw UsageError("batch sizes must be strictly increasing");
  return out;
}

struct BenchOptions {
  std::string address;
  std::size_t context_length = 3;
  std::vector<std::size_t> sizes = parse_sizes("1,16:256:16");
  std::size_t repetitions = 9;
  std::size_t warmup = 3;
  std::uint64_t seed = 7;
};

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::string format_us(double us) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", us);
  return buf;
}

/// Median batch latency per size, written as CSV rows as they complete. A
/// server failure appends a `# aborted` line and rethrows.
inline std::vector<BenchRow> run_bench_batch(const BenchOptions &opt, std::ostream &csv) {
  if (opt.repetitions == 0) throw UsageError("--repetitions must be positive");
  if (opt.sizes.empty()) throw UsageError("no batch sizes");
  ClientOptions co;
  co.address = net::parse_address(opt.address);
  co.retries = 0;
  Connection conn(co);
  static const std::vector<std::string> pool = {"so", "does", "sodas", "it", "work", "is",
                                                "the", "are", "cold", "good"};
  fixtures::Rng rng(opt.seed);
  auto make_batch = [&](std::size_t b) {
    protocol::BatchScoreRequest req;
    for (std::size_t i = 0; i < b; ++i) {
      protocol::ScoreItem item;
      item.context.emplace_back("<s>");
      for (std::size_t k = 1; k < std::max<std::size_t>(1, opt.context_length); ++k)
        item.context.push_back(pool[rng.below(pool.size())]);
      item.word = pool[rng.below(pool.size())];
      req.items.push_back(std::move(item));
    }
    return req;
  };

  csv << "batch_size,total_us,incremental_us\n" << std::flush;
  std::vector<BenchRow> rows;
  try {
    // Repetitions are interleaved across sizes so slow drift in the host
    // lands on every size alike instead of bending the curve.
    std::vector<std::vector<double>> times(opt.sizes.size());
    for (std::size_t r = 0; r < opt.warmup + opt.repetitions; ++r)
      for (std::size_t i = 0; i < opt.sizes.size(); ++i) {
        protocol::Message req = make_batch(opt.sizes[i]);
        const auto t = std::chrono::steady_clock::now();
        conn.call(std::move(req));
        const double us =
            std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t).count();
        if (r >= opt.warmup) times[i].push_back(us);
      }
    for (std::size_t i = 0; i < opt.sizes.size(); ++i) {
      BenchRow row{opt.sizes[i], median(times[i]), std::nullopt};
      if (!rows.empty()) row.incremental_us = row.total_us - rows.back().total_us;
      csv << row.batch_size << ',' << format_us(row.total_us) << ','
          << (row.incremental_us ? format_us(*row.incremental_us) : std::string()) << '\n';
      rows.push_back(row);
    }
    csv << std::flush;
  } catch (const Error &e) {
    csv << "# aborted: " << e.what() << '\n' << std::flush;
    throw;
  }
  return rows;
}

// ---------------------------------------------------------------- fixtures

struct FixtureOptions {
  std::uint64_t seed = 1;
  fs::path output_dir;
  std::size_t count = 24;
  std::size_t session_size = 4;
  int order = 3;  // stamping order
};

/// Writes symbols, the bigram and 4-gram ARPA models, the so-does/sodas
/// lattice and `count` random lattices stamped by the 4-gram at `order`,
/// plus a manifest with references. Byte-identical per seed.
inline void make_fixtures(const FixtureOptions &opt) {
  const fs::path dir = opt.output_dir;
  const SymbolTable symbols = parse_symbols(fixtures::kSymbols);
  const ArpaModel lm4 = fixtures::toy_lm(4);
  ArpaBackend backend(lm4, symbols);

  write_file(dir / "symbols.txt", write_symbols(symbols));
  write_file(dir / "bigram.arpa", write_arpa(parse_arpa(fixtures::kBigramArpa)));
  write_file(dir / "lm.arpa", write_arpa(lm4));
  write_file(dir / "sodas.lat", write_lattice(parse_lattice(fixtures::kSodasLattice)));

  fixtures::Rng rng(opt.seed);
  std::ostringstream manifest, refs;
  manifest << "# session\tutt\tlattice\treference; lm costs from lm.arpa at order "
           << opt.order << "\n";
  auto words_of = [&](const std::vector<WordId> &ids) {
    std::vector<std::string> out;
    for (WordId w : ids) out.push_back(symbols.symbol(w));
    return out;
  };
  const auto arc_words = fixtures::arc_words();
  for (std::size_t i = 0; i < opt.count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "u%04zu", i);
    const std::string utt = name;
    const std::string session = "s" + std::to_string(i / std::max<std::size_t>(1, opt.session_size));
    Lattice lat = fixtures::stamp(fixtures::random_lattice(rng, arc_words, {}, utt), backend, opt.order);
    if (auto issues = validate(lat); !issues.empty())
      throw DataError("generated lattice " + utt + " invalid: " + issues.front());
    Lattice again = canonical(rescore(lat, backend, opt.order));
    for (std::size_t k = 0; k < lat.arcs.size(); ++k)
      if (std::abs(again.arcs[k].weight.lm_cost - lat.arcs[k].weight.lm_cost) > 1e-9)
        throw DataError("generated lattice " + utt + " fails the rescoring identity");

    // Reference: one lattice path, sometimes with a single edit.
    auto paths = enumerate_paths(lat, 1000).paths;
    std::vector<WordId> ref = paths[rng.below(paths.size())].words;
    switch (rng.below(4)) {
      case 1:
        if (!ref.empty()) ref[rng.below(ref.size())] = arc_words[rng.below(arc_words.size())];
        break;
      case 2:
        ref.insert(ref.begin() + static_cast<std::ptrdiff_t>(rng.below(ref.size() + 1)),
                   arc_words[rng.below(arc_words.size())]);
        break;
      case 3:
        if (ref.size() > 1) ref.erase(ref.begin() + static_cast<std::ptrdiff_t>(rng.below(ref.size())));
        break;
      default:
        break;
    }
    if (ref.empty()) ref.push_back(arc_words[rng.below(arc_words.size())]);

    const std::string rel = "lattices/" + utt + ".lat";
    write_file(dir / rel, write_lattice(lat));
    const std::string ref_text = detail::join(words_of(ref));
    manifest << session << '\t' << utt << '\t' << rel << '\t' << ref_text << '\n';
    refs << utt << ' ' << ref_text << '\n';
  }
  write_file(dir / "manifest.tsv", manifest.str());
  write_file(dir / "refs.txt", refs.str());
}

}  // namespace latresc

#endif  // LATRESC_COMMANDS_HPP_
