#include "hmmee/asymptotics.hpp"

#include "hmmee/errors.hpp"
#include "hmmee/pairdist.hpp"
#include "hmmee/simulate.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

namespace hmmee {

namespace {

double min_eigenvalue(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Matrix symmetrize(const Matrix& A) { return 0.5 * (A + A.transpose()); }

PairDensity workspace(const HmmModel& model, int series_terms, bool second_order = false) {
  PairDensityOptions o;
  o.series_terms = series_terms;
  o.second_order = second_order;
  return PairDensity(model, o);
}

// Score (or Hessian, via `fn`) tabulated on node pairs with positive mass.
template <class Fn>
void for_pairs(const NodeSet& ns, const Matrix& omega, Fn&& fn) {
  const auto R = static_cast<int>(ns.nodes.size());
  for (int r = 0; r < R; ++r)
    for (int s = 0; s < R; ++s)
      if (omega(r, s) > 0.0) fn(r, s);
}

Matrix score_table(const PairDensity& ws, const NodeSet& ns, const Matrix& omega) {
  const auto R = static_cast<Eigen::Index>(ns.nodes.size());
  Matrix g = Matrix::Zero(R * R, ws.dim());
  Vector tmp(ws.dim());
  for_pairs(ns, omega, [&](int r, int s) {
    ws.log_density_grad(ns.nodes[static_cast<std::size_t>(r)], ns.nodes[static_cast<std::size_t>(s)], tmp);
    g.row(r * R + s) = tmp.transpose();
  });
  return g;
}

}  // namespace

GaussHermite gauss_hermite(int order) {
  if (order < 1) throw InputError("Gauss–Hermite order must be at least 1");
  Matrix J = Matrix::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    J(k, k - 1) = J(k - 1, k) = std::sqrt(k / 2.0);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(J);
  GaussHermite gh;
  gh.nodes.resize(static_cast<std::size_t>(order));
  gh.weights.resize(static_cast<std::size_t>(order));
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  for (int k = 0; k < order; ++k) {
    gh.nodes[static_cast<std::size_t>(k)] = es.eigenvalues()[k];
    const double v = es.eigenvectors()(0, k);
    gh.weights[static_cast<std::size_t>(k)] = sqrt_pi * v * v;
  }
  return gh;
}

NodeSet node_set(const HmmModel& model, const QuadratureOptions& opts) {
  const int m = model.num_states();
  const SignalFamily& fam = model.family;
  NodeSet ns;
  if (fam.discrete()) {
    int top = 0;
    if (fam.kind() == FamilyKind::categorical) {
      top = fam.num_symbols() - 1;
    } else {
      for (const auto& b : model.betas) top = std::max(top, poisson_support_max(b[0], opts.poisson_tail));
    }
    ns.exact = true;
    ns.nodes.resize(static_cast<std::size_t>(top + 1));
    ns.weights.resize(m, top + 1);
    for (int r = 0; r <= top; ++r) {
      ns.nodes[static_cast<std::size_t>(r)] = r;
      for (int a = 0; a < m; ++a) ns.weights(a, r) = fam.density(model.betas[static_cast<std::size_t>(a)], r, a);
    }
    return ns;
  }
  const GaussHermite gh = gauss_hermite(opts.gh_order);
  const int G = opts.gh_order;
  ns.nodes.resize(static_cast<std::size_t>(m * G));
  ns.weights = Matrix::Zero(m, m * G);
  const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
  for (int a = 0; a < m; ++a) {
    const Vector& beta = model.betas[static_cast<std::size_t>(a)];
    const double mean = beta[0];
    const double var = fam.kind() == FamilyKind::gaussian_full ? 0.5 / beta[1] : fam.sigma2_for(a);
    const double scale = std::sqrt(2.0 * var);
    for (int g = 0; g < G; ++g) {
      const auto idx = static_cast<std::size_t>(a * G + g);
      ns.nodes[idx] = mean + scale * gh.nodes[static_cast<std::size_t>(g)];
      ns.weights(a, a * G + g) = gh.weights[static_cast<std::size_t>(g)] * inv_sqrt_pi;
    }
  }
  return ns;
}

Matrix pair_weights(const NodeSet& ns, const Vector& mu, const Matrix& P) {
  return ns.weights.transpose() * (mu.asDiagonal() * P) * ns.weights;
}

Matrix fisher_info(const HmmModel& model, const QuadratureOptions& opts) {
  const PairDensity ws = workspace(model, opts.series_terms);
  const NodeSet ns = node_set(model, opts);
  const Matrix omega = pair_weights(ns, ws.mu(), model.P);
  const auto R = static_cast<Eigen::Index>(ns.nodes.size());
  const Matrix g = score_table(ws, ns, omega);
  const Vector w = omega.transpose().reshaped(R * R, 1);  // row r·R + s ↔ (r, s)
  Matrix I = symmetrize(g.transpose() * w.asDiagonal() * g);
  const double lam = min_eigenvalue(I);
  if (lam < -1e-8 * std::max(1.0, I.norm())) {
    throw NumericalError("Fisher information is not positive semidefinite (min eigenvalue " + std::to_string(lam) +
                         ", " + std::to_string(R) + " nodes per axis)");
  }
  return I;
}

Vector score_mean(const HmmModel& model, const QuadratureOptions& opts) {
  const PairDensity ws = workspace(model, opts.series_terms);
  const NodeSet ns = node_set(model, opts);
  const Matrix omega = pair_weights(ns, ws.mu(), model.P);
  const auto R = static_cast<Eigen::Index>(ns.nodes.size());
  const Matrix g = score_table(ws, ns, omega);
  const Vector w = omega.transpose().reshaped(R * R, 1);
  return g.transpose() * w;
}

Matrix negative_expected_hessian(const HmmModel& model, const QuadratureOptions& opts) {
  const PairDensity ws = workspace(model, opts.series_terms, true);
  const NodeSet ns = node_set(model, opts);
  const Matrix omega = pair_weights(ns, ws.mu(), model.P);
  Matrix out = Matrix::Zero(ws.dim(), ws.dim());
  for_pairs(ns, omega, [&](int r, int s) {
    out -= omega(r, s) * ws.hess_log(ns.nodes[static_cast<std::size_t>(r)], ns.nodes[static_cast<std::size_t>(s)]);
  });
  return symmetrize(out);
}

Matrix invert_spd(const Matrix& A) {
  if (A.rows() != A.cols()) throw ShapeError("invert_spd needs a square matrix");
  const Matrix S = symmetrize(A);
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  const double lam = es.eigenvalues().minCoeff();
  if (lam < 1e-10) {
    throw SingularInformationError("information matrix is singular (min eigenvalue " + std::to_string(lam) + ")");
  }
  const Matrix& V = es.eigenvectors();
  return symmetrize(V * es.eigenvalues().cwiseInverse().asDiagonal() * V.transpose());
}

LongRunCovariance long_run_covariance(const NodeSet& ns, const Vector& mu, const Matrix& P, const Matrix& f,
                                      int max_lag, double early_stop) {
  if (max_lag < 1) throw InputError("lag truncation must be at least 1");
  const int m = static_cast<int>(P.rows());
  const auto R = static_cast<Eigen::Index>(ns.nodes.size());
  const Eigen::Index D = f.cols();
  if (f.rows() != R * R) throw ShapeError("test-function table must have one row per node pair");
  const Matrix& w = ns.weights;
  const Matrix omega = pair_weights(ns, mu, P);
  const Vector wflat = omega.transpose().reshaped(R * R, 1);

  const Vector mean = f.transpose() * wflat;
  Matrix total = f.transpose() * wflat.asDiagonal() * f - mean * mean.transpose();

  // A_a(s) = Σ_r w_a(r) f(r, s);  B_c(s) = Σ_t w_c(t) f(s, t)
  std::vector<Matrix> A(static_cast<std::size_t>(m), Matrix::Zero(R, D));
  std::vector<Matrix> B(static_cast<std::size_t>(m), Matrix::Zero(R, D));
  for (int a = 0; a < m; ++a) {
    auto& Aa = A[static_cast<std::size_t>(a)];
    auto& Ba = B[static_cast<std::size_t>(a)];
    for (Eigen::Index r = 0; r < R; ++r) {
      const double wr = w(a, r);
      if (wr != 0.0) Aa.noalias() += wr * f.middleRows(r * R, R);
      Ba.row(r) = w.row(a) * f.middleRows(r * R, R);
    }
  }

  LongRunCovariance out;
  // Lag 1: the pairs share Y_1.
  Matrix lag1 = -mean * mean.transpose();
  for (int b = 0; b < m; ++b) {
    Matrix left = Matrix::Zero(R, D), right = Matrix::Zero(R, D);
    for (int a = 0; a < m; ++a) left += (mu[a] * P(a, b)) * A[static_cast<std::size_t>(a)];
    for (int c = 0; c < m; ++c) right += P(b, c) * B[static_cast<std::size_t>(c)];
    lag1.noalias() += left.transpose() * w.row(b).transpose().asDiagonal() * right;
  }
  total += lag1 + lag1.transpose();
  out.lags_used = 1;
  out.last_lag_norm = lag1.norm();

  // Lags k ≥ 2 only see the hidden chain through P^{k−1} − 1μ.
  Matrix L = Matrix::Zero(D, m), Rt = Matrix::Zero(D, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      const Vector gbar = A[static_cast<std::size_t>(a)].transpose() * w.row(b).transpose();
      L.col(b) += mu[a] * P(a, b) * gbar;
      Rt.col(a) += P(a, b) * gbar;
    }
  }
  const Matrix Pi = Vector::Ones(m) * mu.transpose();
  Matrix Pk = P;  // P^{k−1}
  for (int k = 2; k <= max_lag; ++k) {
    const Matrix Ck = L * (Pk - Pi) * Rt.transpose();
    total += Ck + Ck.transpose();
    out.lags_used = k;
    out.last_lag_norm = Ck.norm();
    if (out.last_lag_norm < early_stop) break;
    Pk = Pk * P;
  }
  out.truncated = out.last_lag_norm > 1e-8;
  out.value = symmetrize(total);
  return out;
}

LongRunCovariance gamma_exact(const HmmModel& model, const GammaOptions& opts) {
  const PairDensity ws = workspace(model, opts.quadrature.series_terms);
  const NodeSet ns = node_set(model, opts.quadrature);
  const Matrix omega = pair_weights(ns, ws.mu(), model.P);
  const Matrix g = score_table(ws, ns, omega);
  return long_run_covariance(ns, ws.mu(), model.P, g, opts.max_lag, opts.early_stop);
}

MonteCarloMatrix gamma_mc(const HmmModel& model, std::int64_t n_mc, int reps, std::uint64_t seed, int series_terms,
                          int threads) {
  if (n_mc < 1 || reps < 2) throw InputError("gamma_mc needs n_mc ≥ 1 and at least 2 replications");
  const PairDensity ws = workspace(model, series_terms);
  const int M = ws.dim();
  Matrix S(M, reps);
  auto run = [&](int rep) {
    SimulationConfig cfg{model, ws.mu(), n_mc, replication_seed(seed, static_cast<std::uint64_t>(rep))};
    const Trajectory tr = simulate(cfg);
    Vector acc = Vector::Zero(M), g(M);
    for (std::size_t k = 1; k < tr.signals.size(); ++k) {
      ws.log_density_grad(tr.signals[k - 1], tr.signals[k], g);
      acc += g;
    }
    S.col(rep) = acc / std::sqrt(static_cast<double>(n_mc));
  };
  const int workers = std::clamp(threads, 1, reps);
  if (workers == 1) {
    for (int r = 0; r < reps; ++r) run(r);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int r = w; r < reps; r += workers) run(r);
        } catch (...) {
          errs[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  }
  const Vector mean = S.rowwise().mean();
  const Matrix C = S.colwise() - mean;
  MonteCarloMatrix out;
  out.value = symmetrize(C * C.transpose() / (reps - 1));
  out.std_error.resize(M, M);
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) {
      const Eigen::ArrayXd z = C.row(i).array() * C.row(j).array();
      const double zm = z.mean();
      const double var = (z - zm).square().sum() / (reps - 1);
      out.std_error(i, j) = std::sqrt(var / reps);
    }
  }
  return out;
}

Matrix sandwich(const Matrix& I2, const Matrix& Gamma) {
  const Matrix inv = invert_spd(I2);
  return symmetrize(inv * Gamma * inv);
}

Matrix cov_bound(const Matrix& I2_inv, const DoeblinCertificate& cert) {
  if (!(cert.kappa > 0.0 && cert.kappa <= 1.0)) throw InputError("Doeblin κ must lie in (0, 1]");
  return cert.covariance_factor() * I2_inv;
}

WaldResult wald_test(const Vector& theta_hat, const Vector& theta0, double n, const Matrix& I2,
                     const DoeblinCertificate& cert, double alpha, const WaldOptions& opts) {
  if (!(alpha > 0.5 && alpha < 1.0)) throw InputError("α must lie in (1/2, 1)");
  if (theta_hat.size() != theta0.size() || I2.rows() != theta0.size()) throw ShapeError("wald_test: dimension mismatch");
  if (!(n > 0.0)) throw InputError("wald_test: n must be positive");
  if (opts.samples < 1) throw InputError("wald_test: at least one Monte-Carlo sample is needed");
  const Matrix inv = invert_spd(I2);
  // |I^{-1/2} η| = |L η| for any L with L Lᵀ = I^{-1}.
  const Matrix Lc = Eigen::LLT<Matrix>(inv).matrixL();
  Rng rng(opts.seed);
  const auto M = theta0.size();
  std::vector<double> norms(static_cast<std::size_t>(opts.samples));
  Vector eta(M);
  for (auto& v : norms) {
    for (Eigen::Index k = 0; k < M; ++k) eta[k] = rng.normal();
    v = (Lc * eta).norm();
  }
  const auto idx = static_cast<std::size_t>(std::ceil(alpha * opts.samples)) - 1;
  std::nth_element(norms.begin(), norms.begin() + static_cast<std::ptrdiff_t>(idx), norms.end());
  const double q = norms[idx];
  const double F = cert.covariance_factor();
  WaldResult out;
  out.threshold = opts.rule == WaldRule::literal ? q / std::sqrt(F) : q * std::sqrt(F);
  out.radius = out.threshold / std::sqrt(n);
  out.distance = (theta_hat - theta0).norm();
  out.accept = out.distance <= out.radius;
  return out;
}

AsymptoticsReport asymptotics_report(const HmmModel& model, const GammaOptions& opts, int n0_max) {
  AsymptoticsReport rep;
  rep.I2 = fisher_info(model, opts.quadrature);
  rep.I2_inv = invert_spd(rep.I2);
  const LongRunCovariance g = gamma_exact(model, opts);
  rep.Gamma = g.value;
  rep.lags_used = g.lags_used;
  rep.gamma_truncated = g.truncated;
  rep.last_lag_norm = g.last_lag_norm;
  rep.sandwich = symmetrize(rep.I2_inv * rep.Gamma * rep.I2_inv);
  rep.certificate = doeblin_search(model.P, n0_max);
  if (rep.certificate) rep.bound_matrix = cov_bound(rep.I2_inv, *rep.certificate);
  const NodeSet ns = node_set(model, opts.quadrature);
  rep.exact_support = ns.exact;
  rep.support_size = static_cast<int>(ns.nodes.size());
  rep.gh_order = ns.exact ? 0 : opts.quadrature.gh_order;
  return rep;
}

}  // namespace hmmee
