#include <doctest.h>

#include "../oracles.hpp"
#include "hmmee/errors.hpp"
#include "hmmee/simulate.hpp"

#include <cmath>

using namespace hmmee;

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a(42), b(42), c(43);
  for (int k = 0; k < 100; ++k) {
    const auto x = a.next();
    CHECK(x == b.next());
    CHECK(x != c.next());
  }
  CHECK(derive_seed(7, 0) != derive_seed(7, 1, 0));
  CHECK(derive_seed(7, 1, 3) != derive_seed(7, 1, 4));
  CHECK(replication_seed(10, 3) == (10u ^ 3u));
}

TEST_CASE("samplers have the right first two moments") {
  Rng rng(5);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int k = 0; k < n; ++k) {
    const double u = rng.uniform();
    CHECK_FALSE((u < 0.0 || u >= 1.0));
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(std::abs(su / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(sn / n) < 4 / std::sqrt(double(n)));
  CHECK(std::abs(sn2 / n - 1.0) < 4 * std::sqrt(2.0 / n));
  for (double rate : {0.5, 2.5, 9.0, 30.0, 400.0}) {
    double s = 0, s2 = 0;
    for (int k = 0; k < n; ++k) {
      const double x = static_cast<double>(rng.poisson(rate));
      s += x;
      s2 += x * x;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    CHECK(std::abs(mean - rate) < 4 * std::sqrt(rate / n));
    CHECK(std::abs(var / rate - 1.0) < 0.03);
  }
  const double probs[3] = {0.2, 0.5, 0.3};
  int counts[3] = {0, 0, 0};
  for (int k = 0; k < n; ++k) ++counts[rng.discrete(probs, 3)];
  for (int j = 0; j < 3; ++j) CHECK(std::abs(counts[j] / double(n) - probs[j]) < 0.005);
}

TEST_CASE("poisson sampler matches the pmf in distribution") {
  Rng rng(77);
  const int n = 400000;
  const double rate = 12.0;
  std::vector<int> hist(60, 0);
  for (int k = 0; k < n; ++k) {
    const auto x = rng.poisson(rate);
    if (x < 60) ++hist[static_cast<std::size_t>(x)];
  }
  for (int y = 4; y <= 22; ++y) {
    const double p = oracle::poisson_pmf(rate, y);
    CHECK(std::abs(hist[static_cast<std::size_t>(y)] / double(n) - p) < 5 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("simulate produces n+1 observations and follows P") {
  SimulationConfig cfg{oracle::example1(), Vector::Constant(2, 0.5), 200000, 3};
  const Trajectory tr = simulate(cfg);
  REQUIRE(tr.states.size() == 200001);
  REQUIRE(tr.signals.size() == 200001);
  Matrix counts = Matrix::Zero(2, 2);
  for (std::size_t k = 1; k < tr.states.size(); ++k) counts(tr.states[k - 1], tr.states[k]) += 1;
  for (int i = 0; i < 2; ++i) {
    const double row = counts.row(i).sum();
    for (int j = 0; j < 2; ++j) CHECK(std::abs(counts(i, j) / row - cfg.model.P(i, j)) < 0.01);
  }
  double s0 = 0, n0 = 0;
  for (std::size_t k = 0; k < tr.states.size(); ++k)
    if (tr.states[k] == 0) {
      s0 += tr.signals[k];
      n0 += 1;
    }
  CHECK(std::abs(s0 / n0 - 2.5) < 0.03);
  const Trajectory again = simulate(cfg);
  CHECK(again.signals == tr.signals);
}

TEST_CASE("simulate rejects bad inputs") {
  SimulationConfig cfg{oracle::example1(), Vector::Constant(2, 0.5), 0, 1};
  CHECK_THROWS_AS(simulate(cfg), InputError);
  cfg.n = 10;
  cfg.nu = Vector::Constant(2, 0.7);
  CHECK_THROWS_AS(simulate(cfg), InputError);
}

TEST_CASE("gaussian signals have the state mean and variance") {
  SimulationConfig cfg{oracle::example2(), Vector::Constant(2, 0.5), 100000, 9};
  const Trajectory tr = simulate(cfg);
  double s[2] = {0, 0}, s2[2] = {0, 0}, c[2] = {0, 0};
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    const int x = tr.states[k];
    s[x] += tr.signals[k];
    s2[x] += tr.signals[k] * tr.signals[k];
    c[x] += 1;
  }
  CHECK(std::abs(s[0] / c[0] - 0.0) < 0.02);
  CHECK(std::abs(s[1] / c[1] - 3.0) < 0.02);
  CHECK(std::abs(s2[1] / c[1] - 9.0 - 1.0) < 0.06);
}
