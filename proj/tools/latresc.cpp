// tools/latresc.cpp

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

// latresc: lattice rescoring, evaluation, LM serving and benchmarking.
// Exit codes: 0 ok, 1 usage, 2 data, 3 network.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "latresc/commands.hpp"
#include "latresc/conformance.hpp"

int main(int argc, char **argv) {
  using namespace latresc;
  CLI::App app{"Lattice rescoring with on-demand and remote language models"};
  app.require_subcommand(1);

  RescoreOptions ro;
  std::string arpa, remote;
  auto *rescore_cmd = app.add_subcommand("rescore", "Rescore the lattices in a manifest");
  rescore_cmd->add_option("--manifest", ro.manifest, "session/utt/lattice manifest")->required();
  rescore_cmd->add_option("--symbols", ro.symbols, "word symbol table")->required();
  rescore_cmd->add_option("--order", ro.order, "n-gram history approximation order")
      ->capture_default_str();
  auto *arpa_opt = rescore_cmd->add_option("--arpa", arpa, "local ARPA model");
  auto *remote_opt = rescore_cmd->add_option("--remote", remote, "LM server host:port");
  arpa_opt->excludes(remote_opt);
  rescore_cmd->add_option("--mode", ro.mode, "sequential or batch")
      ->check(CLI::IsMember({"sequential", "batch"}))
      ->capture_default_str();
  rescore_cmd->add_option("--lm-scale", ro.lm_scale, "LM weight for best-path search")
      ->capture_default_str();
  rescore_cmd->add_flag("--mems", ro.mems, "carry best-path memory between utterances of a session");
  rescore_cmd->add_flag("--mems-chain", ro.mems_chain,
                        "extend the previous memory instead of keeping one utterance");
  rescore_cmd->add_option("--output-dir", ro.output_dir, "where lattices and transcripts go")
      ->required();
  rescore_cmd->add_option("--jobs", ro.jobs, "sessions rescored in parallel")->capture_default_str();
  rescore_cmd->add_option("--max-batch", ro.max_batch, "items per batch request (server max_batch)")
      ->capture_default_str();

  std::string hyp, ref;
  auto *wer_cmd = app.add_subcommand("wer", "Corpus word error rate");
  wer_cmd->add_option("hyp", hyp, "hypothesis transcript")->required();
  wer_cmd->add_option("ref", ref, "reference transcript")->required();

  std::string oracle_manifest, oracle_symbols;
  double oracle_scale = 1.0;
  auto *oracle_cmd = app.add_subcommand("oracle", "Oracle and best-path WER of lattices");
  oracle_cmd->add_option("--manifest", oracle_manifest, "manifest with references")->required();
  oracle_cmd->add_option("--symbols", oracle_symbols, "word symbol table")->required();
  oracle_cmd->add_option("--lm-scale", oracle_scale, "LM weight for the best path")
      ->capture_default_str();

  ServeOptions so;
  auto *serve_cmd = app.add_subcommand("serve", "Run the ARPA LM server");
  serve_cmd->add_option("--model", so.model, "ARPA model")->required();
  serve_cmd->add_option("--address", so.address, "host:port (port 0 picks one)")->capture_default_str();
  serve_cmd->add_option("--capacity", so.config.capacity, "stored mems entries")->capture_default_str();
  serve_cmd->add_option("--mem-len", so.config.mem_len, "words kept per mems entry")
      ->capture_default_str();
  serve_cmd->add_option("--max-batch", so.config.max_batch, "largest accepted batch")
      ->capture_default_str();
  serve_cmd->add_flag("--quiet", so.quiet, "no per-request log lines");

  BenchOptions bo;
  std::string sizes = "1,16:256:16";
  auto *bench_cmd = app.add_subcommand("bench-batch", "Batch latency benchmark (CSV on stdout)");
  bench_cmd->add_option("--address", bo.address, "LM server host:port")->required();
  bench_cmd->add_option("--context-length", bo.context_length, "words of context per item")
      ->capture_default_str();
  bench_cmd->add_option("--sizes", sizes, "batch sizes, e.g. 1,16:256:16")->capture_default_str();
  bench_cmd->add_option("--repetitions", bo.repetitions, "requests per size (median taken)")
      ->capture_default_str();
  bench_cmd->add_option("--warmup", bo.warmup, "untimed rounds over all sizes first")->capture_default_str();

  FixtureOptions fo;
  auto *fixtures_cmd = app.add_subcommand("make-fixtures", "Write the fixture corpus");
  fixtures_cmd->add_option("--seed", fo.seed, "random seed")->capture_default_str();
  fixtures_cmd->add_option("--output-dir", fo.output_dir, "target directory")->required();
  fixtures_cmd->add_option("--count", fo.count, "random lattices")->capture_default_str();
  fixtures_cmd->add_option("--order", fo.order, "stamping order")->capture_default_str();

  std::string conformance_dir;
  auto *conf_cmd = app.add_subcommand("make-conformance", "Write the wire-protocol vectors");
  conf_cmd->add_option("--output-dir", conformance_dir, "target directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : static_cast<int>(ErrorKind::kUsage);
  }

  try {
    if (*rescore_cmd) {
      if (!arpa.empty()) ro.arpa = arpa;
      if (!remote.empty()) ro.remote = remote;
      auto results = run_rescore(ro);
      std::cerr << "rescored " << results.size() << " utterances into " << ro.output_dir.string()
                << "\n";
    } else if (*wer_cmd) {
      run_wer(hyp, ref, std::cout);
    } else if (*oracle_cmd) {
      run_oracle(oracle_manifest, oracle_symbols, oracle_scale, std::cout);
    } else if (*serve_cmd) {
      run_serve(so);
    } else if (*bench_cmd) {
      bo.sizes = parse_sizes(sizes);
      run_bench_batch(bo, std::cout);
    } else if (*fixtures_cmd) {
      make_fixtures(fo);
    } else if (*conf_cmd) {
      for (const auto &[name, text] : conformance::render(conformance::generate()))
        write_file(std::filesystem::path(conformance_dir) / name, text);
    }
  } catch (const Error &e) {
    std::cerr << "latresc: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception &e) {
    std::cerr << "latresc: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kData);
  }
  return 0;
}
