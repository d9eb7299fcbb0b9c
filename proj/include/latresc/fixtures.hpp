// latresc/fixtures.hpp

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

// Small deterministic fixtures: a symbol table, a hand-built bigram LM, the
// "so does / sodas" lattice, a toy higher-order LM, and seeded random
// lattices. Everything here is reproducible from a seed.

#ifndef LATRESC_FIXTURES_HPP_
#define LATRESC_FIXTURES_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "latresc/arpa.hpp"
#include "latresc/lattice.hpp"
#include "latresc/lattice_io.hpp"
#include "latresc/lm_interface.hpp"
#include "latresc/paths.hpp"
#include "latresc/rescore.hpp"
#include "latresc/symbol_table.hpp"

namespace latresc::fixtures {

inline constexpr std::string_view kSymbols =
    "<eps> 0\n<unk> 1\nso 2\ndoes 3\nsodas 4\nit 5\nwork 6\nis 7\nthe 8\nare 9\n"
    "cold 10\ngood 11\n<s> 12\n</s> 13\n";

/// Words that may label lattice arcs (everything but <eps>, <s>, </s>).
inline std::vector<WordId> arc_words() { return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}; }

// Bigram LM over the corpus {"so does it", "sodas it"}: add-one unigrams
// over the 6 predictable types, add-one bigrams for the 6 seen pairs, and
// backoff weights that renormalize each history exactly.
//   p(so)=p(does)=p(sodas)=2/13, p(it)=p(</s>)=3/13, p(<unk>)=1/13
//   p(so|<s>)=p(sodas|<s>)=1/4, p(does|so)=p(it|does)=p(it|sodas)=2/7,
//   p(</s>|it)=3/8
//   bo(<s>)=13/18, bo(so)=65/77, bo(does)=bo(sodas)=13/14, bo(it)=13/16
inline constexpr std::string_view kBigramArpa = R"(\data\
ngram 1=7
ngram 2=6

\1-grams:
-0.6368220975871743	</s>
-99	<s>	-0.14132915279646932
-1.1139433523068367	<unk>
-0.8129133566428556	does	-0.03218468337140124
-0.6368220975871743	it	-0.090176630349088
-0.8129133566428556	so	-0.07357736852962632
-0.8129133566428556	sodas	-0.03218468337140124

\2-grams:
-0.6020599913279624	<s> so
-0.6020599913279624	<s> sodas
-0.5440680443502757	so does
-0.5440680443502757	does it
-0.5440680443502757	sodas it
-0.42596873227228116	it </s>

\end\
)";

// Two paths: "so does" (total 3.0 at lm_scale 1) and "sodas" (2.5). Both
// have acoustic cost 1.0.
inline constexpr std::string_view kSodasLattice =
    "utt sodas\n"
    "0 1 2 1,0.5\n"
    "0 2 4 1,0.5\n"
    "1 3 3 0.5,0.25\n"
    "2 3 0 0,0.25\n"
    "3 0.5,0.25\n"
    "\n";

inline const std::vector<std::string> &toy_corpus() {
  static const std::vector<std::string> corpus = {
      "so does it work",
      "sodas it is",
      "it does work",
      "so it is",
      "the sodas are cold",
      "the cold sodas are good",
      "it is good",
      "so the work is good",
      "does it work",
      "the work is cold",
      "so does the work",
      "sodas are good",
      "it is cold so it does",
      "the sodas are good so does it",
      "so does it work so it is good",
  };
  return corpus;
}

inline std::vector<std::vector<std::string>> split_corpus(const std::vector<std::string> &lines) {
  std::vector<std::vector<std::string>> out;
  for (const auto &l : lines) {
    std::vector<std::string> ws;
    for (auto t : detail::split_ws(l)) ws.emplace_back(t);
    out.push_back(std::move(ws));
  }
  return out;
}

/// Backoff LM of the given order over `sentences`: add-one estimates for
/// seen n-grams, backoff weights chosen so every history normalizes over the
/// predictable vocabulary. A fixture builder, not a general estimator.
inline ArpaModel estimate_backoff_lm(const std::vector<std::vector<std::string>> &sentences,
                                     int order) {
  using Gram = std::vector<std::string>;
  std::vector<std::map<Gram, double>> counts(order);
  std::set<std::string> types{"</s>", "<unk>"};
  double tokens = 0;
  for (const auto &s : sentences) {
    std::vector<std::string> padded{"<s>"};
    padded.insert(padded.end(), s.begin(), s.end());
    padded.push_back("</s>");
    for (std::size_t i = 1; i < padded.size(); ++i) {
      types.insert(padded[i]);
      tokens += 1;
    }
    for (int n = 1; n <= order; ++n)
      for (std::size_t i = 0; i + n <= padded.size(); ++i) {
        Gram g(padded.begin() + i, padded.begin() + i + n);
        if (n == 1 && g[0] == "<s>") continue;
        counts[n - 1][g] += 1;
      }
  }
  const double V = static_cast<double>(types.size());

  // prob[n-1][gram] and backoff[n-1][gram], both as probabilities.
  std::vector<std::map<Gram, double>> prob(order), backoff(order);
  for (const auto &t : types) prob[0][{t}] = (counts[0][{t}] + 1.0) / (tokens + V);
  for (int n = 2; n <= order; ++n) {
    std::map<Gram, double> history_total;
    for (const auto &[g, c] : counts[n - 1]) history_total[Gram(g.begin(), g.end() - 1)] += c;
    for (const auto &[g, c] : counts[n - 1])
      prob[n - 1][g] = (c + 1.0) / (history_total[Gram(g.begin(), g.end() - 1)] + V);
  }
  // Lower-order scorer over the tables built so far.
  std::function<double(Gram, const std::string &)> score = [&](Gram h, const std::string &w) {
    if (h.size() > static_cast<std::size_t>(order - 1)) h.erase(h.begin());
    Gram g = h;
    g.push_back(w);
    if (auto it = prob[g.size() - 1].find(g); it != prob[g.size() - 1].end()) return it->second;
    if (h.empty()) return 0.0;
    double bo = 1.0;
    if (auto it = backoff[h.size() - 1].find(h); it != backoff[h.size() - 1].end()) bo = it->second;
    return bo * score(Gram(h.begin() + 1, h.end()), w);
  };
  for (int n = 2; n <= order; ++n) {
    std::map<Gram, std::vector<std::string>> continuations;
    for (const auto &[g, p] : prob[n - 1])
      continuations[Gram(g.begin(), g.end() - 1)].push_back(g.back());
    for (const auto &[h, ws] : continuations) {
      double listed = 0.0, lower = 0.0;
      for (const auto &w : ws) {
        Gram g = h;
        g.push_back(w);
        listed += prob[n - 1][g];
        lower += score(Gram(h.begin() + 1, h.end()), w);
      }
      backoff[n - 2][h] = (1.0 - listed) / (1.0 - lower);
    }
  }

  ArpaModel model;
  auto emit = [&](int n) {
    std::map<Gram, double> table = prob[n - 1];
    if (n == 1) table[{"<s>"}] = 0.0;
    for (const auto &[g, p] : table) {
      double lp = (n == 1 && g[0] == "<s>") ? -99.0 : std::log10(p);
      std::optional<double> bo;
      if (n < order)
        if (auto it = backoff[n - 1].find(g); it != backoff[n - 1].end())
          bo = std::log10(it->second);
      model.add(g, lp, bo);
    }
  };
  for (int n = 1; n <= order; ++n) emit(n);
  model.finalize();
  return model;
}

inline ArpaModel toy_lm(int order) { return estimate_backoff_lm(split_corpus(toy_corpus()), order); }

/// Portable draws from a 64-bit engine (std distributions are not
/// specified bit-for-bit across standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  int between(int lo, int hi) { return lo + static_cast<int>(below(hi - lo + 1)); }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

struct RandomLatticeOptions {
  int min_states = 2;
  int max_states = 8;
  int max_extra_arcs = 6;
  double epsilon_prob = 0.1;
  double extra_final_prob = 0.15;
  bool dyadic_costs = false;  // multiples of 1/8, so sums are exact
  std::size_t max_paths = 1000;
};

/// Random valid acyclic lattice: states in topological id order, each state
/// fed from an earlier one and feeding a later one; the last state is final.
inline Lattice random_lattice(Rng &rng, const std::vector<WordId> &words,
                              const RandomLatticeOptions &opt, std::string utt_id) {
  auto cost = [&]() {
    if (opt.dyadic_costs) return static_cast<double>(rng.below(41)) / 8.0;
    return 5.0 * rng.unit();
  };
  while (true) {
    Lattice lat;
    lat.utt_id = utt_id;
    const int n = rng.between(opt.min_states, opt.max_states);
    lat.num_states = n;
    auto add_arc = [&](StateId src, StateId dst) {
      Arc a;
      a.src = src;
      a.dst = dst;
      a.word = rng.chance(opt.epsilon_prob) ? kEpsilon : words[rng.below(words.size())];
      a.weight.lm_cost = cost();
      a.weight.ac_cost = cost();
      lat.arcs.push_back(a);
    };
    std::vector<char> has_out(n, 0);
    for (StateId s = 1; s < n; ++s) {
      StateId src = static_cast<StateId>(rng.below(s));
      add_arc(src, s);
      has_out[src] = 1;
    }
    for (StateId s = 0; s + 1 < n; ++s)
      if (!has_out[s]) add_arc(s, s + 1 + static_cast<StateId>(rng.below(n - s - 1)));
    if (n > 1) {
      const int extra = rng.between(0, opt.max_extra_arcs);
      for (int k = 0; k < extra; ++k) {
        StateId a = static_cast<StateId>(rng.below(n - 1));
        StateId b = a + 1 + static_cast<StateId>(rng.below(n - a - 1));
        add_arc(a, b);
      }
    }
    lat.finals[n - 1] = CostPair{cost(), cost()};
    for (StateId s = 0; s + 1 < n; ++s)
      if (rng.chance(opt.extra_final_prob)) lat.finals[s] = CostPair{cost(), cost()};
    lat = canonical(lat);
    if (enumerate_paths(lat, opt.max_paths).truncated) continue;
    return lat;
  }
}

/// Lattice whose lm_costs are exactly what `backend` assigns at `order`:
/// the composition of `lat` with the LM. Every state then carries a single
/// LM history, so rescoring it again is the identity.
inline Lattice stamp(const Lattice &lat, LmBackend &backend, int order) {
  return canonical(rescore(lat, backend, order));
}

}  // namespace latresc::fixtures

#endif  // LATRESC_FIXTURES_HPP_
