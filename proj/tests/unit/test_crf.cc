#include <doctest.h>

#include <cmath>
#include <limits>

#include "tev/bio.h"
#include "tev/crf.h"
#include "tev/optim.h"

using namespace tev;

namespace {

EmissionMatrix emissions(int n, int T, std::vector<double> scores) {
  return {n, T, std::move(scores)};
}

EmissionMatrix random_emissions(int n, int T, Rng &rng, double scale = 2.0) {
  EmissionMatrix e{n, T, std::vector<double>(static_cast<size_t>(n) * T)};
  for (double &x : e.scores) x = rng.uniform(-scale, scale);
  return e;
}

CrfWeights random_crf(int T, Rng &rng, double scale = 2.0) {
  CrfWeights c = CrfWeights::zeros(T);
  for (double &x : c.transitions) x = rng.uniform(-scale, scale);
  for (double &x : c.start) x = rng.uniform(-scale, scale);
  for (double &x : c.end) x = rng.uniform(-scale, scale);
  return c;
}

// Direct sum over every path, written here independently of the library.
double enumerate_log_partition(const EmissionMatrix &e, const CrfWeights &c) {
  const int n = e.length, T = e.num_tags;
  std::vector<int> path(n, 0);
  std::vector<double> scores;
  while (true) {
    double s = c.start[path[0]] + c.end[path[n - 1]];
    for (int t = 0; t < n; ++t) s += e(t, path[t]);
    for (int t = 1; t < n; ++t) s += c.transition(path[t - 1], path[t]);
    scores.push_back(s);
    int k = n - 1;
    while (k >= 0 && ++path[k] == T) path[k--] = 0;
    if (k < 0) break;
  }
  double m = -std::numeric_limits<double>::infinity();
  for (double s : scores) m = std::max(m, s);
  double z = 0;
  for (double s : scores) z += std::exp(s - m);
  return m + std::log(z);
}

}  // namespace

TEST_CASE("log_partition examples") {
  const CrfWeights z2 = CrfWeights::zeros(2);
  CHECK(log_partition(emissions(2, 2, {0, 0, 0, 0}), z2) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-14));
  const double a = 0.3, b = -1.2, c = 2.5;
  CHECK(log_partition(emissions(1, 3, {a, b, c}), CrfWeights::zeros(3)) ==
        doctest::Approx(std::log(std::exp(a) + std::exp(b) + std::exp(c))).epsilon(1e-14));
  const double expected = std::log(std::exp(1) + std::exp(2) + std::exp(0) + std::exp(1));
  CHECK(expected == doctest::Approx(2.626523).epsilon(1e-6));
  CHECK(log_partition(emissions(2, 2, {1, 0, 0, 1}), z2) ==
        doctest::Approx(expected).epsilon(1e-14));
  CHECK_THROWS(log_partition(emissions(0, 2, {}), z2));
}

TEST_CASE("nll examples") {
  const CrfWeights z2 = CrfWeights::zeros(2);
  const EmissionMatrix e = emissions(2, 2, {1, 0, 0, 1});
  CHECK(nll(e, z2, {0, 1}) == doctest::Approx(0.626523).epsilon(1e-6));
  for (std::vector<int> gold : {std::vector<int>{0, 0}, {0, 1}, {1, 0}, {1, 1}}) {
    CHECK(nll(emissions(2, 2, {0, 0, 0, 0}), z2, gold) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-14));
  }
  // The Viterbi path has the smallest loss of all four golds.
  const auto best = viterbi(e, z2).tags;
  for (std::vector<int> gold : {std::vector<int>{0, 0}, {0, 1}, {1, 0}, {1, 1}}) {
    CHECK(nll(e, z2, best) <= nll(e, z2, gold));
  }
  CHECK_THROWS(nll(e, z2, {0}));
}

TEST_CASE("viterbi examples") {
  const CrfWeights z2 = CrfWeights::zeros(2);
  const ViterbiResult r = viterbi(emissions(2, 2, {1, 0, 0, 1}), z2);
  CHECK(r.tags == std::vector<int>{0, 1});
  CHECK(r.score == 2.0);
  CHECK(viterbi(emissions(3, 2, std::vector<double>(6, 0.0)), z2).tags ==
        std::vector<int>{0, 0, 0});

  // Emission argmax is [0, 1]; a steep 0->1 penalty flips it.
  CrfWeights c = CrfWeights::zeros(2);
  c.transitions[0 * 2 + 1] = -10;
  const ViterbiResult flipped = viterbi(emissions(2, 2, {1, 0, 0, 1}), c);
  CHECK(flipped.tags != std::vector<int>{0, 1});
  CHECK(flipped.tags == brute_force_oracle(emissions(2, 2, {1, 0, 0, 1}), c).best);
  CHECK_THROWS(viterbi(emissions(0, 2, {}), z2));
}

TEST_CASE("brute force oracle agrees with independent enumeration and DP") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(5));
    const int T = 1 + static_cast<int>(rng.index(6));
    const EmissionMatrix e = random_emissions(n, T, rng);
    const CrfWeights c = random_crf(T, rng);
    const OracleResult o = brute_force_oracle(e, c);
    CHECK(o.log_partition == doctest::Approx(enumerate_log_partition(e, c)).epsilon(1e-12));
    CHECK(std::abs(log_partition(e, c) - o.log_partition) <= 1e-10);
    const ViterbiResult v = viterbi(e, c);
    CHECK(v.tags == o.best);
    CHECK(v.score == o.best_score);
    CHECK(path_score(e, c, v.tags) == v.score);
  }
}

TEST_CASE("brute force limits and single-token case") {
  const EmissionMatrix e = emissions(1, 3, {0.5, 2.0, -1.0});
  const OracleResult o = brute_force_oracle(e, CrfWeights::zeros(3));
  CHECK(o.best == std::vector<int>{1});
  CHECK(o.best_score == 2.0);
  Rng rng(1);
  CHECK_THROWS(brute_force_oracle(random_emissions(7, 9, rng), CrfWeights::zeros(9)));
}

TEST_CASE("property: partition bounds every path; nll is non-negative") {
  Rng rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(6));
    const EmissionMatrix e = random_emissions(n, 9, rng);
    const CrfWeights c = random_crf(9, rng);
    const double z = log_partition(e, c);
    CHECK(z > viterbi(e, c).score);
    std::vector<int> gold(n);
    for (int &g : gold) g = static_cast<int>(rng.index(9));
    CHECK(z >= path_score(e, c, gold));
    CHECK(nll(e, c, gold) > 0.0);
  }
}

TEST_CASE("property: shifting one emission row shifts the partition exactly") {
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(6));
    EmissionMatrix e = random_emissions(n, 9, rng);
    const CrfWeights c = random_crf(9, rng);
    const double z = log_partition(e, c);
    const auto best = viterbi(e, c).tags;
    const int row = static_cast<int>(rng.index(n));
    const double shift = rng.uniform(-5, 5);
    for (int j = 0; j < 9; ++j) e.scores[static_cast<size_t>(row) * 9 + j] += shift;
    CHECK(log_partition(e, c) - z == doctest::Approx(shift).epsilon(1e-10));
    CHECK(viterbi(e, c).tags == best);
  }
}

TEST_CASE("constrained decode always yields legal BIO") {
  Rng rng(34);
  const TransitionMask mask = TransitionMask::bio();
  int unconstrained_illegal = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(8));
    const EmissionMatrix e = random_emissions(n, 9, rng, 4.0);
    const CrfWeights c = random_crf(9, rng, 4.0);
    auto to_tags = [](const std::vector<int> &ids) {
      TagSequence tags;
      for (int i : ids) tags.push_back(tag_from_index(i));
      return tags;
    };
    CHECK(validate(to_tags(viterbi(e, c, &mask).tags)).empty());
    unconstrained_illegal += !validate(to_tags(viterbi(e, c).tags)).empty();
  }
  CHECK(unconstrained_illegal > 0);
}

TEST_CASE("crf_nll matches the plain nll and passes grad_check") {
  Rng rng(35);
  ParamStore store;
  const CrfParams crf = CrfParams::create(store, "crf", 9, rng);
  for (double &x : crf.start.node()->value) x = rng.uniform(-1, 1);
  for (double &x : crf.end.node()->value) x = rng.uniform(-1, 1);
  const int n = 4;
  std::vector<double> ev(n * 9);
  for (double &x : ev) x = rng.uniform(-2, 2);
  const Tensor em = Tensor::from({n, 9}, ev, true);
  const std::vector<int> gold = {1, 2, 0, 7};
  const Tensor loss = crf_nll(em, crf, gold);
  CHECK(loss.item() ==
        doctest::Approx(nll(EmissionMatrix::from_tensor(em), crf.weights(), gold)).epsilon(1e-12));
  const GradCheckResult r = grad_check([&] { return crf_nll(em, crf, gold); },
                                       {{"emissions", em},
                                        {"transitions", crf.transitions},
                                        {"start", crf.start},
                                        {"end", crf.end}});
  CHECK(r.max_relative_error <= 1e-4);
}
