// tests/cli_test.cpp

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

// Drives the latresc binary as a subprocess.

#include <gtest/gtest.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "latresc/commands.hpp"
#include "latresc/lm_server.hpp"
#include "latresc/remote_client.hpp"
#include "oracles.hpp"

namespace latresc {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out, err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("latresc_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string &args) {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    std::string cmd = std::string(LATRESC_CLI_PATH) + " " + args + " >" + out.string() + " 2>" +
                      err.string();
    int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out);
    r.err = read_file(err);
    return r;
  }

  fs::path fixtures(std::uint64_t seed = 5, const std::string &name = "fx") {
    Result r = run("make-fixtures --seed " + std::to_string(seed) + " --output-dir " +
                   (dir_ / name).string());
    EXPECT_EQ(r.code, 0) << r.err;
    return dir_ / name;
  }

  std::string rescore_args(const fs::path &fx, const std::string &backend, const std::string &out) {
    return "rescore --manifest " + (fx / "manifest.tsv").string() + " --symbols " +
           (fx / "symbols.txt").string() + " --order 3 " + backend + " --output-dir " +
           (dir_ / out).string();
  }

  fs::path dir_;
};

std::map<std::string, std::string> tree(const fs::path &root) {
  std::map<std::string, std::string> out;
  for (const auto &e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
  return out;
}

// `latresc serve` in a child process on a free port.
class ServeProcess {
 public:
  explicit ServeProcess(const std::string &model, const std::string &extra = "") {
    int fds[2];
    EXPECT_EQ(::pipe(fds), 0);
    pid_ = ::fork();
    if (pid_ == 0) {
      ::dup2(fds[1], 2);
      ::close(fds[0]);
      ::close(fds[1]);
      std::string cmd = std::string("exec ") + LATRESC_CLI_PATH + " serve --quiet --address 127.0.0.1:0 --model " +
                        model + " " + extra;
      ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char *>(nullptr));
      ::_exit(127);
    }
    ::close(fds[1]);
    err_ = ::fdopen(fds[0], "r");
    char buf[512];
    if (std::fgets(buf, sizeof(buf), err_)) {
      auto j = nlohmann::json::parse(buf, nullptr, false);
      if (j.is_object() && j.contains("address")) address_ = j["address"].get<std::string>();
    }
    EXPECT_FALSE(address_.empty());
  }

  ~ServeProcess() {
    if (pid_ > 0) stop();
    if (err_) std::fclose(err_);
  }

  const std::string &address() const { return address_; }

  int stop() {
    ::kill(pid_, SIGTERM);
    int status = 0;
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

 private:
  pid_t pid_ = -1;
  FILE *err_ = nullptr;
  std::string address_;
};

TEST_F(CliTest, MakeFixturesIsDeterministicAndValid) {
  fs::path a = fixtures(9, "a"), b = fixtures(9, "b"), c = fixtures(10, "c");
  EXPECT_EQ(tree(a), tree(b));
  EXPECT_NE(tree(a), tree(c));
  SymbolTable symbols = load_symbols(a / "symbols.txt");
  ArpaModel lm = load_arpa(a / "lm.arpa");
  ArpaBackend backend(lm, symbols);
  std::size_t n = 0;
  for (const auto &rec : read_manifest(a / "manifest.tsv")) {
    Lattice lat = load_lattice(rec.lattice_path, rec.utt_id);
    EXPECT_TRUE(validate(lat).empty());
    Lattice again = canonical(rescore(lat, backend, 3));
    ASSERT_EQ(again.arcs.size(), lat.arcs.size());
    for (std::size_t i = 0; i < lat.arcs.size(); ++i)
      EXPECT_NEAR(again.arcs[i].weight.lm_cost, lat.arcs[i].weight.lm_cost, 1e-9);
    ++n;
  }
  EXPECT_EQ(n, 24u);
}

TEST_F(CliTest, LocalRescoreIsByteIdenticalAcrossRuns) {
  fs::path fx = fixtures();
  const std::string backend = "--arpa " + (fx / "lm.arpa").string();
  ASSERT_EQ(run(rescore_args(fx, backend, "r1")).code, 0);
  Result r = run(rescore_args(fx, backend + " --jobs 3", "r2"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(tree(dir_ / "r1" / "lattices"), tree(dir_ / "r2" / "lattices"));
  EXPECT_EQ(read_file(dir_ / "r1" / "transcript.txt"), read_file(dir_ / "r2" / "transcript.txt"));
  auto summary = nlohmann::json::parse(read_file(dir_ / "r1" / "summary.json"));
  EXPECT_EQ(summary["utterances"].size(), 24u);
  EXPECT_EQ(tree(dir_ / "r1" / "lattices").size(), 24u);
}

TEST_F(CliTest, EmptyManifestGivesEmptyOutputs) {
  fs::path fx = fixtures();
  write_file(fx / "manifest.tsv", "");
  Result r = run(rescore_args(fx, "--arpa " + (fx / "lm.arpa").string(), "out"));
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(dir_ / "out" / "transcript.txt"), "");
}

TEST_F(CliTest, RemoteModesMatchLocal) {
  fs::path fx = fixtures();
  ServeProcess server((fx / "lm.arpa").string(), "--max-batch 16");
  ASSERT_EQ(run(rescore_args(fx, "--arpa " + (fx / "lm.arpa").string(), "local")).code, 0);
  Result seq = run(rescore_args(fx, "--remote " + server.address(), "seq"));
  ASSERT_EQ(seq.code, 0) << seq.err;
  Result batch = run(rescore_args(fx, "--remote " + server.address() + " --mode batch --max-batch 16", "batch"));
  ASSERT_EQ(batch.code, 0) << batch.err;
  for (const char *mode : {"seq", "batch"}) {
    EXPECT_EQ(tree(dir_ / "local" / "lattices"), tree(dir_ / mode / "lattices")) << mode;
    EXPECT_EQ(read_file(dir_ / "local" / "transcript.txt"), read_file(dir_ / mode / "transcript.txt"));
  }
  // With memory on, the two remote modes still agree with each other.
  ASSERT_EQ(run(rescore_args(fx, "--remote " + server.address() + " --mems", "mseq")).code, 0);
  ASSERT_EQ(run(rescore_args(fx, "--remote " + server.address() + " --mems --mode batch --max-batch 16", "mbatch")).code, 0);
  EXPECT_EQ(tree(dir_ / "mseq" / "lattices"), tree(dir_ / "mbatch" / "lattices"));
  EXPECT_NE(tree(dir_ / "mseq" / "lattices"), tree(dir_ / "seq" / "lattices"));
  EXPECT_EQ(server.stop(), 0);
}

TEST_F(CliTest, ServeLifecycle) {
  fs::path fx = fixtures();
  ServeProcess server((fx / "lm.arpa").string());
  ClientOptions o;
  o.address = net::parse_address(server.address());
  Connection conn(o);
  auto r = conn.call(protocol::ScoreRequest{1, {}, "so", std::nullopt});
  EXPECT_TRUE(std::holds_alternative<protocol::ScoreResponse>(r));
  EXPECT_EQ(server.stop(), 0);
}

TEST_F(CliTest, ServeFailsOnBadModel) {
  write_file(dir_ / "bad.arpa", "not an arpa file\n");
  EXPECT_EQ(run("serve --model " + (dir_ / "bad.arpa").string()).code, 2);
}

TEST_F(CliTest, WerReports) {
  write_file(dir_ / "ref.txt", "a so does it work so it\nb sodas it is good\n");
  write_file(dir_ / "hyp.txt", "b sodas it is cold\na so does it work so it\n");
  Result r = run("wer " + (dir_ / "hyp.txt").string() + " " + (dir_ / "ref.txt").string());
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("%WER 10.00 [ 1 / 10, 0 ins, 0 del, 1 sub ]"), std::string::npos) << r.out;
  r = run("wer " + (dir_ / "ref.txt").string() + " " + (dir_ / "ref.txt").string());
  EXPECT_NE(r.out.find("%WER 0.00 "), std::string::npos);
  write_file(dir_ / "short.txt", "a so does it work so it\n");
  EXPECT_EQ(run("wer " + (dir_ / "short.txt").string() + " " + (dir_ / "ref.txt").string()).code, 2);
}

TEST_F(CliTest, WerAggregateEqualsScoreCorpus) {
  fs::path fx = fixtures();
  ASSERT_EQ(run(rescore_args(fx, "--arpa " + (fx / "lm.arpa").string(), "out")).code, 0);
  std::ostringstream sink;
  WerCounts got = run_wer(dir_ / "out" / "transcript.txt", fx / "refs.txt", sink);
  Transcript hyp = read_transcript(dir_ / "out" / "transcript.txt");
  Transcript ref = read_transcript(fx / "refs.txt");
  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> pairs;
  std::size_t oracle_errors = 0, ref_words = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    ASSERT_EQ(hyp[i].utt_id, ref[i].utt_id);
    pairs.emplace_back(hyp[i].words, ref[i].words);
    oracle_errors += testing::edit_distance(hyp[i].words, ref[i].words);
    ref_words += ref[i].words.size();
  }
  EXPECT_EQ(got, score_corpus(pairs));
  EXPECT_EQ(got.errors(), oracle_errors);
  EXPECT_EQ(got.reference_length, ref_words);
  Result r = run("wer " + (dir_ / "out" / "transcript.txt").string() + " " + (fx / "refs.txt").string());
  EXPECT_NE(r.out.find(wer_line("", got)), std::string::npos);
}

TEST_F(CliTest, OracleBounds) {
  fs::path fx = fixtures();
  Result r = run("oracle --manifest " + (fx / "manifest.tsv").string() + " --symbols " +
                 (fx / "symbols.txt").string());
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("oracle <= best: yes"), std::string::npos);

  // References taken from each lattice's own best path: oracle 0.
  std::ostringstream m;
  SymbolTable symbols = load_symbols(fx / "symbols.txt");
  for (const auto &rec : read_manifest(fx / "manifest.tsv")) {
    Path p = best_path(load_lattice(rec.lattice_path, rec.utt_id), 1.0);
    if (p.words.empty()) continue;
    std::vector<std::string> ws;
    for (WordId w : p.words) ws.push_back(symbols.symbol(w));
    m << rec.session_id << '\t' << rec.utt_id << '\t' << rec.lattice_path.string() << '\t'
      << detail::join(ws) << '\n';
  }
  write_file(dir_ / "embedded.tsv", m.str());
  r = run("oracle --manifest " + (dir_ / "embedded.tsv").string() + " --symbols " +
          (fx / "symbols.txt").string());
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("%WER oracle 0.00 "), std::string::npos) << r.out;
}

TEST_F(CliTest, OracleEqualsBestOnSinglePathLattices) {
  write_file(dir_ / "symbols.txt", std::string(fixtures::kSymbols));
  write_file(dir_ / "a.lat", "utt a\n0 1 2 1,1\n1 2 3 1,1\n2 0,0\n\n");
  write_file(dir_ / "b.lat", "utt b\n0 1 4 1,1\n1 0,0\n\n");
  write_file(dir_ / "m.tsv", "s\ta\ta.lat\tso it\ns\tb\tb.lat\tsodas it is\n");
  std::ostringstream out;
  OracleReport rep = run_oracle(dir_ / "m.tsv", dir_ / "symbols.txt", 1.0, out);
  EXPECT_EQ(rep.oracle, rep.best);
  EXPECT_EQ(rep.oracle.errors(), 3u);
  write_file(dir_ / "noref.tsv", "s\ta\ta.lat\n");
  EXPECT_EQ(run("oracle --manifest " + (dir_ / "noref.tsv").string() + " --symbols " +
                (dir_ / "symbols.txt").string()).code, 2);
}

TEST_F(CliTest, BenchSchema) {
  fs::path fx = fixtures();
  ServeProcess server((fx / "lm.arpa").string());
  Result one = run("bench-batch --address " + server.address() + " --sizes 1 --repetitions 1");
  ASSERT_EQ(one.code, 0) << one.err;
  EXPECT_EQ(one.out.substr(0, one.out.find('\n')), "batch_size,total_us,incremental_us");
  std::istringstream rows(one.out);
  std::string header, row, extra;
  std::getline(rows, header);
  std::getline(rows, row);
  EXPECT_EQ(row.substr(0, 2), "1,");
  EXPECT_EQ(row.back(), ',');  // blank incremental
  EXPECT_FALSE(std::getline(rows, extra));

  Result nine = run("bench-batch --address " + server.address() + " --sizes 1,128,512 --repetitions 9");
  ASSERT_EQ(nine.code, 0) << nine.err;
  std::istringstream in(nine.out);
  std::getline(in, header);
  std::vector<double> totals;
  while (std::getline(in, row)) {
    auto c1 = row.find(','), c2 = row.rfind(',');
    totals.push_back(std::stod(row.substr(c1 + 1, c2 - c1 - 1)));
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), 2);
  }
  ASSERT_EQ(totals.size(), 3u);
  EXPECT_LE(totals[0], totals[1]);
  EXPECT_LE(totals[1], totals[2]);
}

TEST_F(CliTest, ExitCodes) {
  fs::path fx = fixtures();
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("rescore --bogus").code, 1);
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run(rescore_args(fx, "", "o")).code, 1);  // no backend
  EXPECT_EQ(run(rescore_args(fx, "--arpa x --remote y:1", "o")).code, 1);
  EXPECT_EQ(run(rescore_args(fx, "--arpa " + (fx / "lm.arpa").string() + " --mems", "o")).code, 1);
  EXPECT_EQ(run(rescore_args(fx, "--arpa " + (fx / "missing.arpa").string(), "o")).code, 2);
  // A corrupt lattice is named in the diagnostic.
  write_file(fx / "lattices" / "u0003.lat", "utt u0003\n0 1 2 bad\n\n");
  Result r = run(rescore_args(fx, "--arpa " + (fx / "lm.arpa").string(), "o"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("u0003"), std::string::npos) << r.err;
  // Nothing listens on this port.
  net::Address dead;
  {
    net::Socket s = net::listen_on(net::parse_address("127.0.0.1:0"));
    dead.port = net::bound_port(s);
  }
  r = run(rescore_args(fx, "--remote " + dead.str(), "o"));
  EXPECT_EQ(r.code, 3) << r.err;
  r = run("bench-batch --address " + dead.str() + " --sizes 1");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("# aborted"), std::string::npos);
}

}  // namespace
}  // namespace latresc
