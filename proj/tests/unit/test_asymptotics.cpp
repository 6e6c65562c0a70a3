#include <doctest.h>

#include "../oracles.hpp"
#include "hmmee/asymptotics.hpp"
#include "hmmee/errors.hpp"
#include "hmmee/pairdist.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

using namespace hmmee;

namespace {

double min_eig(const Matrix& a) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (a + a.transpose())).eigenvalues().minCoeff();
}

HmmModel single_poisson(double beta) {
  HmmModel m;
  m.P = Matrix::Ones(1, 1);
  m.betas = {Vector::Constant(1, beta)};
  return m;
}

// E_Q[g gᵀ] with finite-difference scores and the enumerated Q.
Matrix brute_fisher(const HmmModel& m, int top) {
  const Vector theta = theta_pack(m);
  Matrix I = Matrix::Zero(theta.size(), theta.size());
  for (int y = 0; y <= top; ++y)
    for (int z = 0; z <= top; ++z) {
      const Vector g = oracle::fd_grad_log_q(m, theta, y, z);
      I += oracle::pair_density(m, y, z) * g * g.transpose();
    }
  return I;
}

}  // namespace

TEST_CASE("Gauss-Hermite rule integrates polynomials exactly") {
  const auto gh = gauss_hermite(40);
  double s0 = 0, s4 = 0, s6 = 0;
  for (std::size_t k = 0; k < gh.nodes.size(); ++k) {
    const double t = gh.nodes[k];
    s0 += gh.weights[k];
    s4 += gh.weights[k] * std::pow(t, 4);
    s6 += gh.weights[k] * std::pow(t, 6);
  }
  const double sp = std::sqrt(std::numbers::pi);
  CHECK(s0 == doctest::Approx(sp).epsilon(1e-12));
  CHECK(s4 == doctest::Approx(0.75 * sp).epsilon(1e-12));
  CHECK(s6 == doctest::Approx(15.0 / 8.0 * sp).epsilon(1e-12));
}

TEST_CASE("single-state Poisson: Fisher information and Γ in closed form") {
  for (double beta : {0.7, 2.0, 5.0}) {
    const HmmModel m = single_poisson(beta);
    CHECK(fisher_info(m)(0, 0) == doctest::Approx(2.0 / beta).epsilon(1e-9));
    CHECK(gamma_exact(m).value(0, 0) == doctest::Approx(4.0 / beta).epsilon(1e-9));
  }
  const auto mc = gamma_mc(single_poisson(2.0), 2000, 400, 17);
  CHECK(std::abs(mc.value(0, 0) - 2.0) < 3 * mc.std_error(0, 0));
}

TEST_CASE("Fisher information agrees with the brute-force oracle") {
  const HmmModel m = oracle::example1();
  const Matrix I = fisher_info(m, {40, 1e-14, 200});
  CHECK(oracle::max_abs(I - brute_fisher(m, 30)) < 1e-6);
  const HmmModel c = oracle::small_categorical();
  CHECK(oracle::max_abs(fisher_info(c, {40, 1e-12, 200}) - brute_fisher(c, 2)) < 1e-6);
}

TEST_CASE("score has mean zero under Q") {
  CHECK(score_mean(oracle::example1()).cwiseAbs().maxCoeff() < 1e-6);
  // Gauss–Hermite with 40 nodes integrates log Q only approximately.
  CHECK(score_mean(oracle::example2()).cwiseAbs().maxCoeff() < 1e-5);
  CHECK(score_mean(oracle::small_categorical()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("information identity") {
  for (const HmmModel& m : {oracle::example1(), oracle::example2(), oracle::small_categorical()}) {
    const Matrix I = fisher_info(m, {40, 1e-12, 200});
    const Matrix H = negative_expected_hessian(m, {40, 1e-12, 200});
    CHECK(oracle::max_abs(I - H) < 1e-4);
  }
}

TEST_CASE("invert_spd") {
  CHECK(oracle::max_abs(invert_spd(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)) < 1e-15);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2;
  d(1, 1) = 4;
  const Matrix di = invert_spd(d);
  CHECK(di(0, 0) == doctest::Approx(0.5));
  CHECK(di(1, 1) == doctest::Approx(0.25));
  Matrix s = Matrix::Ones(2, 2);
  CHECK_THROWS_AS(invert_spd(s), SingularInformationError);
  const Matrix I = fisher_info(oracle::example2());
  CHECK((I * invert_spd(I) - Matrix::Identity(4, 4)).cwiseAbs().rowwise().sum().maxCoeff() < 1e-8);
}

TEST_CASE("gamma_exact matches explicit enumeration of hidden paths") {
  const HmmModel m = oracle::small_categorical();
  const Vector theta = theta_pack(m);
  auto score = [&](int y, int z) { return Vector(oracle::fd_grad_log_q(m, theta, y, z, 1e-7)); };
  const Matrix ref = oracle::long_run_enumerated(m, 3, score, 60);
  GammaOptions o;
  o.quadrature.series_terms = 200;
  const auto g = gamma_exact(m, o);
  CHECK(oracle::max_abs(g.value - ref) < 1e-6);
  CHECK(oracle::max_abs(g.value - g.value.transpose()) < 1e-10);
  CHECK_FALSE(g.truncated);
}

TEST_CASE("independent hidden states: lags beyond one vanish") {
  HmmModel m = oracle::small_categorical();
  m.P << 0.3, 0.7, 0.3, 0.7;
  GammaOptions one, many;
  one.max_lag = 1;
  many.max_lag = 50;
  const auto a = gamma_exact(m, one);
  const auto b = gamma_exact(m, many);
  CHECK(oracle::max_abs(a.value - b.value) < 1e-14);
  CHECK(b.lags_used == 2);
}

TEST_CASE("gamma_exact agrees with Monte Carlo on the first example") {
  const HmmModel m = oracle::example1();
  const auto g = gamma_exact(m);
  const auto mc = gamma_mc(m, 4000, 400, 2024, 30, 2);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(std::abs(g.value(i, j) - mc.value(i, j)) <= 3 * mc.std_error(i, j));
  const auto again = gamma_mc(m, 4000, 400, 2024, 30, 1);
  CHECK(again.value == mc.value);
}

TEST_CASE("sandwich and bound") {
  const Matrix id = Matrix::Identity(3, 3);
  CHECK(oracle::max_abs(sandwich(id, id) - id) < 1e-15);
  const Matrix I = fisher_info(oracle::example1());
  CHECK(oracle::max_abs(sandwich(I, I) - invert_spd(I)) < 1e-10);
  DoeblinCertificate c{1, 1.0, {}};
  CHECK(oracle::max_abs(cov_bound(id, c) - 3.0 * id) < 1e-15);
  c.kappa = 0.6;
  CHECK(cov_bound(id, c)(0, 0) == doctest::Approx(6.4415).epsilon(1e-4));
  for (const HmmModel& m : {oracle::example1(), oracle::example2()}) {
    const auto rep = asymptotics_report(m);
    REQUIRE(rep.certificate);
    CHECK(min_eig(rep.bound_matrix - rep.sandwich) >= -1e-8);
    CHECK(min_eig(rep.Gamma) >= -1e-8);
    CHECK(min_eig(rep.sandwich) >= -1e-8);
  }
}

TEST_CASE("Wald test thresholds") {
  const Matrix id = Matrix::Identity(1, 1);
  DoeblinCertificate c{1, 1.0, {}};
  WaldOptions lit;
  lit.rule = WaldRule::literal;
  const auto r = wald_test(Vector::Zero(1), Vector::Zero(1), 100, id, c, 0.95, lit);
  CHECK(r.threshold == doctest::Approx(1.95996 / std::sqrt(3.0)).epsilon(0.01));
  CHECK(r.accept);
  const auto cons = wald_test(Vector::Zero(1), Vector::Zero(1), 100, id, c, 0.95);
  CHECK(cons.threshold == doctest::Approx(1.95996 * std::sqrt(3.0)).epsilon(0.01));
  const auto far = wald_test(Vector::Constant(1, 1.0), Vector::Zero(1), 100, id, c, 0.95);
  CHECK_FALSE(far.accept);
  CHECK_THROWS_AS(wald_test(Vector::Zero(1), Vector::Zero(1), 100, id, c, 0.4), InputError);
}
