#pragma once

#include "hmmee/markov.hpp"
#include "hmmee/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hmmee {

struct QuadratureOptions {
  int gh_order = 40;           // Gauss–Hermite nodes per mixture component
  double poisson_tail = 1e-12; // truncation of the Poisson support
  int series_terms = 30;
};

/// Gauss–Hermite rule for ∫ f(t) e^{−t²} dt (Golub–Welsch).
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussHermite gauss_hermite(int order);

/// A shared list of signal values with per-state weights such that
///   ∫ f(y) q_a(y) σ(dy) ≈ Σ_r weights(a, r) f(nodes[r]).
/// Discrete families use their (truncated) support with weights q_a(r);
/// Gaussian families concatenate each state's Gauss–Hermite nodes, and a
/// state puts zero weight on the other states' nodes.
struct NodeSet {
  std::vector<double> nodes;
  Matrix weights;  // m × R
  bool exact = false;  // discrete support (possibly truncated) rather than quadrature
};
NodeSet node_set(const HmmModel& model, const QuadratureOptions& opts = {});

/// Mass ω(r, s) = Σ_ab μ_a p_ab w_a(r) w_b(s) of each node pair under Q_θ.
Matrix pair_weights(const NodeSet& ns, const Vector& mu, const Matrix& P);

/// Fisher information I_2(θ) = E_Q[∇log Q ∇log Qᵀ].
Matrix fisher_info(const HmmModel& model, const QuadratureOptions& opts = {});
/// E_Q[∇log Q]; zero up to integration error.
Vector score_mean(const HmmModel& model, const QuadratureOptions& opts = {});
/// −E_Q[∇² log Q]; equals the Fisher information up to integration error.
Matrix negative_expected_hessian(const HmmModel& model, const QuadratureOptions& opts = {});

Matrix invert_spd(const Matrix& A);

/// Long-run covariance Σ_k Cov(f(Y_0,Y_1), f(Y_k,Y_{k+1})) (both signs of k) of a
/// vector test function f tabulated on node pairs: row r·R + s of `f` holds f(node_r, node_s).
struct LongRunCovariance {
  Matrix value;
  int lags_used = 0;
  double last_lag_norm = 0.0;
  bool truncated = false;  // last lag term still above 1e-8
};
LongRunCovariance long_run_covariance(const NodeSet& ns, const Vector& mu, const Matrix& P, const Matrix& f,
                                      int max_lag = 200, double early_stop = 1e-10);

struct GammaOptions {
  int max_lag = 200;
  double early_stop = 1e-10;
  QuadratureOptions quadrature;
};

/// Γ_θ for the score ∂ℓ with ℓ = log Q_θ, computed from the exact joint law of
/// (X_0, X_1, X_k, X_{k+1}) and conditional independence of the signals.
LongRunCovariance gamma_exact(const HmmModel& model, const GammaOptions& opts = {});

struct MonteCarloMatrix {
  Matrix value;
  Matrix std_error;
};

/// Γ̂ = covariance across `reps` stationary-started trajectories of
/// (1/√n_mc) Σ_k ∇ℓ(Y_{k−1}, Y_k).
MonteCarloMatrix gamma_mc(const HmmModel& model, std::int64_t n_mc, int reps, std::uint64_t seed,
                          int series_terms = 30, int threads = 1);

Matrix sandwich(const Matrix& I2, const Matrix& Gamma);
Matrix cov_bound(const Matrix& I2_inv, const DoeblinCertificate& cert);

/// How the Wald radius uses the covariance factor F = 1 + 2n0/(1−√(1−κ)).
///   literal       c_α = q_α / √F
///   conservative  c_α = q_α · √F (covers the bound covariance F·I₂⁻¹)
/// where q_α is the α-quantile of |I₂^{-1/2} η| for standard normal η.
enum class WaldRule { literal, conservative };

struct WaldOptions {
  WaldRule rule = WaldRule::conservative;
  int samples = 200000;
  std::uint64_t seed = 1;
};

struct WaldResult {
  bool accept = false;
  double threshold = 0.0;  // c_α
  double radius = 0.0;     // c_α / √n
  double distance = 0.0;   // |θ̂ − θ0|
};

WaldResult wald_test(const Vector& theta_hat, const Vector& theta0, double n, const Matrix& I2,
                     const DoeblinCertificate& cert, double alpha, const WaldOptions& opts = {});

struct AsymptoticsReport {
  Matrix I2, I2_inv, Gamma, sandwich, bound_matrix;
  std::optional<DoeblinCertificate> certificate;
  int gh_order = 0;
  bool exact_support = false;
  int support_size = 0;
  int lags_used = 0;
  bool gamma_truncated = false;
  double last_lag_norm = 0.0;
};

AsymptoticsReport asymptotics_report(const HmmModel& model, const GammaOptions& opts = {}, int n0_max = 10);

}  // namespace hmmee
