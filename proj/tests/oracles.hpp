#pragma once

// Reference implementations used only by tests. Each takes a different route
// from the library: linear solves instead of power iteration, explicit
// enumeration instead of factorized sums, finite differences instead of
// analytic derivatives.

#include "hmmee/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using hmmee::HmmModel;
using hmmee::Matrix;
using hmmee::Vector;

// μ from the linear system μ(P − I) = 0, Σμ = 1.
inline Vector stationary(const Matrix& P) {
  const auto m = P.rows();
  Matrix A(m + 1, m);
  A.topRows(m) = (P - Matrix::Identity(m, m)).transpose();
  A.row(m).setOnes();
  Vector b = Vector::Zero(m + 1);
  b[m] = 1.0;
  return A.colPivHouseholderQr().solve(b);
}

inline double poisson_pmf(double rate, int y) {
  double p = std::exp(-rate);
  for (int k = 1; k <= y; ++k) p *= rate / k;
  return p;
}

inline double normal_pdf(double mean, double var, double y) {
  return std::exp(-(y - mean) * (y - mean) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

inline double emission(const HmmModel& m, int state, double y) {
  const Vector& b = m.betas[static_cast<std::size_t>(state)];
  switch (m.family.kind()) {
    case hmmee::FamilyKind::poisson: return poisson_pmf(b[0], static_cast<int>(y));
    case hmmee::FamilyKind::gaussian_known_var: return normal_pdf(b[0], m.family.sigma2_for(state), y);
    case hmmee::FamilyKind::gaussian_full: return normal_pdf(b[0], 0.5 / b[1], y);
    case hmmee::FamilyKind::categorical: return b[static_cast<int>(y)];
  }
  return 0.0;
}

// Q(y, y') by the defining double sum with μ from the linear solve.
inline double pair_density(const HmmModel& m, double y, double y2) {
  const Vector mu = stationary(m.P);
  double q = 0.0;
  for (int a = 0; a < m.num_states(); ++a)
    for (int b = 0; b < m.num_states(); ++b) q += mu[a] * m.P(a, b) * emission(m, a, y) * emission(m, b, y2);
  return q;
}

// Central difference of f at θ.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& theta, double h = 1e-6) {
  Vector g(theta.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    Vector tp = theta, tm = theta;
    tp[k] += h;
    tm[k] -= h;
    g[k] = (f(tp) - f(tm)) / (2.0 * h);
  }
  return g;
}

inline Vector fd_grad_log_q(const HmmModel& shape, const Vector& theta, double y, double y2, double h = 1e-6) {
  return fd_gradient(
      [&](const Vector& t) { return std::log(pair_density(hmmee::theta_unpack(t, shape), y, y2)); }, theta, h);
}

// ∂μ/∂θ by differencing the linear-solve μ along the transition coordinates.
inline std::vector<Vector> fd_stationary_grad(const HmmModel& shape, double h = 1e-6) {
  const Vector theta = hmmee::theta_pack(shape);
  const hmmee::ThetaLayout layout(shape);
  std::vector<Vector> out;
  for (int l = 0; l < layout.num_transition(); ++l) {
    Vector tp = theta, tm = theta;
    tp[l] += h;
    tm[l] -= h;
    out.push_back((stationary(hmmee::theta_unpack(tp, shape).P) - stationary(hmmee::theta_unpack(tm, shape).P)) /
                  (2.0 * h));
  }
  return out;
}

// Long-run covariance of f(Y_0, Y_1) for a finite-alphabet HMM by explicit
// enumeration of hidden paths for lags 0 and 1, and of (a,b,c,d) with
// P^{k−1}(b,c) for lags ≥ 2. f maps (y, y') to a D-vector.
inline Matrix long_run_enumerated(const HmmModel& m, int num_symbols, const std::function<Vector(int, int)>& f,
                                  int lags) {
  const Vector mu = stationary(m.P);
  const int S = m.num_states();
  auto e = [&](int a, int y) { return emission(m, a, y); };
  const Vector f00 = f(0, 0);
  const auto D = f00.size();
  Vector mean = Vector::Zero(D);
  Matrix c0 = Matrix::Zero(D, D);
  for (int y = 0; y < num_symbols; ++y)
    for (int y2 = 0; y2 < num_symbols; ++y2) {
      const double q = pair_density(m, y, y2);
      const Vector v = f(y, y2);
      mean += q * v;
      c0 += q * v * v.transpose();
    }
  Matrix total = c0 - mean * mean.transpose();
  // lag 1: (Y0,Y1) and (Y1,Y2)
  Matrix c1 = Matrix::Zero(D, D);
  for (int a = 0; a < S; ++a)
    for (int b = 0; b < S; ++b)
      for (int c = 0; c < S; ++c) {
        const double w = mu[a] * m.P(a, b) * m.P(b, c);
        for (int y0 = 0; y0 < num_symbols; ++y0)
          for (int y1 = 0; y1 < num_symbols; ++y1)
            for (int y2 = 0; y2 < num_symbols; ++y2)
              c1 += w * e(a, y0) * e(b, y1) * e(c, y2) * f(y0, y1) * f(y1, y2).transpose();
      }
  c1 -= mean * mean.transpose();
  total += c1 + c1.transpose();
  Matrix Pk = m.P;
  for (int k = 2; k <= lags; ++k) {
    Matrix ck = Matrix::Zero(D, D);
    for (int a = 0; a < S; ++a)
      for (int b = 0; b < S; ++b)
        for (int c = 0; c < S; ++c)
          for (int d = 0; d < S; ++d) {
            const double w = mu[a] * m.P(a, b) * Pk(b, c) * m.P(c, d);
            Vector fa = Vector::Zero(D), fc = Vector::Zero(D);
            for (int y0 = 0; y0 < num_symbols; ++y0)
              for (int y1 = 0; y1 < num_symbols; ++y1) {
                fa += e(a, y0) * e(b, y1) * f(y0, y1);
                fc += e(c, y0) * e(d, y1) * f(y0, y1);
              }
            ck += w * fa * fc.transpose();
          }
    ck -= mean * mean.transpose();
    total += ck + ck.transpose();
    Pk = Pk * m.P;
  }
  return 0.5 * (total + total.transpose());
}

inline HmmModel example1() {
  HmmModel m;
  m.P.resize(2, 2);
  m.P << 0.3, 0.7, 0.6, 0.4;
  m.betas = {Vector::Constant(1, 2.5), Vector::Constant(1, 0.5)};
  m.family = hmmee::SignalFamily::poisson();
  m.domain.order = hmmee::StateOrder::descending;
  return m;
}

inline HmmModel example2() {
  HmmModel m;
  m.P.resize(2, 2);
  m.P << 0.2, 0.8, 0.7, 0.3;
  m.betas = {Vector::Constant(1, 0.0), Vector::Constant(1, 3.0)};
  m.family = hmmee::SignalFamily::gaussian_known_var(1.0);
  return m;
}

// Two states, three symbols.
inline HmmModel small_categorical() {
  HmmModel m;
  m.P.resize(2, 2);
  m.P << 0.75, 0.25, 0.4, 0.6;
  Vector b1(3), b2(3);
  b1 << 0.6, 0.3, 0.1;
  b2 << 0.1, 0.3, 0.6;
  m.betas = {b1, b2};
  m.family = hmmee::SignalFamily::categorical(3);
  m.domain.order = hmmee::StateOrder::none;
  return m;
}

inline double max_abs(const Matrix& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace oracle
