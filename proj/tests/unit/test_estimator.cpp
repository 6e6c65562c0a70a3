#include <doctest.h>

#include "../oracles.hpp"
#include "hmmee/errors.hpp"
#include "hmmee/estimator.hpp"
#include "hmmee/hypotest.hpp"
#include "hmmee/simulate.hpp"

#include <cmath>

using namespace hmmee;

namespace {

// Counts-mode data whose empirical law is exactly Q_θ on a truncated support.
PairEmpirical exact_counts(const HmmModel& m, int top) {
  const PairDensity ws(m);
  std::map<PairKey, double> w;
  for (int y = 0; y <= top; ++y)
    for (int z = 0; z <= top; ++z) w[{y, z}] = ws.density(y, z);
  return PairEmpirical::from_weights(w);
}

HmmModel swapped_poisson() {
  HmmModel m;
  m.P.resize(2, 2);
  m.P << 0.3, 0.7, 0.6, 0.4;
  m.betas = {Vector::Constant(1, 3.0), Vector::Constant(1, 1.0)};
  return m;  // ascending order by default, so states are out of order
}

}  // namespace

TEST_CASE("objective of a single pair") {
  const auto data = pair_counts(std::vector<double>{0, 0});
  const HmmModel m = oracle::example1();
  CHECK(objective(data, m, theta_pack(m)) == doctest::Approx(2.18626).epsilon(1e-5));
}

TEST_CASE("counts and stream objectives agree") {
  const HmmModel m = oracle::example1();
  const auto tr = simulate({m, Vector::Constant(2, 0.5), 20000, 4});
  const auto c = pair_counts(tr.signals);
  const auto s = pair_stream(tr.signals);
  const PairDensity ws(m);
  const auto oc = objective_and_gradient(ws, c);
  const auto os = objective_and_gradient(ws, s, 3);
  CHECK(std::abs(oc.value - os.value) < 1e-12);
  CHECK((oc.grad - os.grad).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(objective(ws, s, 1) == doctest::Approx(os.value).epsilon(1e-14));
}

TEST_CASE("stream gradient does not depend on the thread count") {
  const HmmModel m = oracle::example2();
  const auto tr = simulate({m, Vector::Constant(2, 0.5), 30000, 5});
  const auto s = pair_stream(tr.signals);
  const PairDensity ws(m);
  const auto a = objective_and_gradient(ws, s, 1);
  const auto b = objective_and_gradient(ws, s, 4);
  CHECK(a.value == b.value);
  CHECK(a.grad == b.grad);
}

TEST_CASE("exact data: zero relative entropy and a stationary point") {
  const HmmModel m = oracle::example1();
  const auto L = exact_counts(m, 30);
  const Vector theta = theta_pack(m);
  CHECK(std::abs(relative_entropy_objective(L, m, theta)) < 1e-12);
  const auto ov = objective_and_gradient(PairDensity(m, {200}), L);
  CHECK(ov.grad.norm() < 1e-8);

  EstimatorConfig cfg;
  cfg.series_terms = 200;
  const Vector next = gd_step(theta, m, L, cfg);
  CHECK((next - theta).norm() < 1e-8);
  const auto tr = run_2re(L, m, cfg);
  CHECK(tr.stop_reason == StopReason::gradient_norm);
  CHECK(tr.iterations == 0);
}

TEST_CASE("relative entropy differs from the objective by a θ-free constant") {
  Rng rng(31);
  const HmmModel m = oracle::example1();
  for (int rep = 0; rep < 20; ++rep) {
    std::map<PairKey, double> w;
    for (int y = 0; y < 6; ++y)
      for (int z = 0; z < 6; ++z) w[{y, z}] = rng.uniform();
    const auto L = PairEmpirical::from_weights(w);
    double neg_entropy = 0.0;
    for (const auto& p : L.weighted_pairs()) {
      const double l = p.weight / L.n();
      neg_entropy += l * std::log(l);
    }
    Vector theta = theta_pack(m);
    theta[0] = 0.2 + 0.6 * rng.uniform();
    theta[2] = 0.5 + 3 * rng.uniform();
    const double h = relative_entropy_objective(L, m, theta);
    CHECK(std::abs(h - (objective(L, m, theta) + neg_entropy)) < 1e-12);
  }
}

TEST_CASE("relative entropy dominates twice the squared total variation") {
  Rng rng(99);
  const HmmModel base = oracle::small_categorical();
  for (int rep = 0; rep < 1000; ++rep) {
    HmmModel m = base;
    m.P(0, 1) = 0.05 + 0.9 * rng.uniform();
    m.P(0, 0) = 1 - m.P(0, 1);
    Vector b(3);
    b << 0.05 + rng.uniform(), 0.05 + rng.uniform(), 0.05 + rng.uniform();
    m.betas[0] = b / b.sum();
    std::map<PairKey, double> w;
    for (int y = 0; y < 3; ++y)
      for (int z = 0; z < 3; ++z) w[{y, z}] = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
    if (w.begin()->second == 0.0) w.begin()->second = 0.5;
    const auto L = PairEmpirical::from_weights(w);
    const SymbolSet S = symbol_set(m);
    const double tv = tv_distance(empirical_pair_law(L, S), pair_law(m, S));
    CHECK(relative_entropy_objective(L, m, theta_pack(m)) >= 2 * tv * tv - 1e-12);
  }
}

TEST_CASE("projection onto the domain") {
  const HmmModel m = oracle::example1();
  CHECK((project_feasible(theta_pack(m), m) - theta_pack(m)).norm() == 0.0);

  HmmModel f = m;
  f.domain.p_floor = 0.01;
  Vector t = theta_pack(f);
  t[0] = 1.05;
  const Vector p = project_feasible(t, f);
  CHECK(p[0] == doctest::Approx(0.99));
  const HmmModel pm = theta_unpack(p, f);
  CHECK(pm.P(0, 0) == doctest::Approx(0.01));

  HmmModel box = m;
  box.domain.beta_lo = Vector::Constant(1, 0.1);
  box.domain.beta_hi = Vector::Constant(1, 2.0);
  const HmmModel clipped = project_feasible(box);
  CHECK(clipped.betas[0][0] == doctest::Approx(2.0));
}

TEST_CASE("projection relabels states and keeps Q") {
  const HmmModel m = swapped_poisson();
  const HmmModel s = project_feasible(m);
  CHECK(s.betas[0][0] == 1.0);
  CHECK(s.betas[1][0] == 3.0);
  CHECK(s.P(0, 0) == doctest::Approx(0.4));
  CHECK(s.P(0, 1) == doctest::Approx(0.6));
  const PairDensity a(m), b(s);
  for (int y = 0; y < 8; ++y)
    for (int z = 0; z < 8; ++z) CHECK(a.density(y, z) == doctest::Approx(b.density(y, z)).epsilon(1e-12));
}

TEST_CASE("zero step leaves θ unchanged") {
  const HmmModel m = oracle::example1();
  const auto data = pair_counts(simulate({m, Vector::Constant(2, 0.5), 1000, 2}).signals);
  EstimatorConfig cfg;
  cfg.step = 0.0;
  CHECK((gd_step(theta_pack(m), m, data, cfg) - theta_pack(m)).norm() == 0.0);
}

TEST_CASE("one step from the example start decreases the objective") {
  const HmmModel m = oracle::example1();
  const auto data = pair_counts(simulate({m, Vector::Constant(2, 0.5), 100000, 1}).signals);
  HmmModel start = m;
  start.P << 0.5, 0.5, 0.5, 0.5;
  start.betas = {Vector::Constant(1, 3.0), Vector::Constant(1, 0.1)};
  const Vector t0 = theta_pack(start);
  EstimatorConfig cfg;
  const Vector t1 = gd_step(t0, start, data, cfg);
  CHECK(objective(data, start, t1) < objective(data, start, t0));
}

TEST_CASE("descent from the truth stays near the truth") {
  HmmModel m = oracle::example1();
  const auto data = pair_counts(simulate({m, Vector::Constant(2, 0.5), 100000, 12}).signals);
  EstimatorConfig cfg;
  cfg.line_search = true;
  cfg.max_iters = 2000;
  const auto tr = run_2re(data, m, cfg);
  CHECK(tr.monotone);
  CHECK(tr.stop_reason != StopReason::non_finite);
  CHECK((tr.theta_hat - theta_pack(m)).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("relabeled start reaches the same estimate") {
  const HmmModel m = oracle::example2();
  const auto tr = simulate({m, Vector::Constant(2, 0.5), 5000, 21});
  const auto data = pair_stream(tr.signals);
  HmmModel start = m;
  start.P << 0.5, 0.5, 0.5, 0.5;
  start.betas = {Vector::Constant(1, 0.0), Vector::Constant(1, 1.0)};
  HmmModel flipped = start;
  flipped.betas = {Vector::Constant(1, 1.0), Vector::Constant(1, 0.0)};
  EstimatorConfig cfg;
  cfg.step = 0.1;
  cfg.max_iters = 200;
  const auto a = run_2re(data, start, cfg);
  const auto b = run_2re(data, flipped, cfg);
  CHECK(a.monotone);
  CHECK((a.theta_hat - b.theta_hat).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("estimator configuration is validated") {
  EstimatorConfig cfg;
  cfg.step = -1;
  CHECK_THROWS_AS(cfg.check(), InputError);
  cfg = {};
  cfg.series_terms = 0;
  CHECK_THROWS_AS(cfg.check(), InputError);
  CHECK(to_string(StopReason::objective_plateau) == "objective_plateau");
}

TEST_CASE("evaluation errors stop the run with the trace so far") {
  HmmModel m = oracle::small_categorical();
  Vector b(3);
  b << 0.5, 0.5, 0.0;
  m.betas = {b, b};
  const auto data = pair_counts(std::vector<double>{0, 2, 1});
  const auto tr = run_2re(data, m, {});
  CHECK(tr.stop_reason == StopReason::non_finite);
  CHECK_FALSE(tr.error.empty());
}
