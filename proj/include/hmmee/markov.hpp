#pragma once

#include "hmmee/model.hpp"

#include <optional>
#include <vector>

namespace hmmee {

struct StationaryResult {
  Vector mu;
  int iterations = 0;
  double residual = 0.0;  // ‖μP − μ‖₁
};

/// Invariant law of P by power iteration from the uniform vector.
/// Throws NonConvergenceError when `max_iter` steps do not reach `tol`.
StationaryResult stationary(const Matrix& P, double tol = 1e-12, int max_iter = 100000);

/// Series Σ_{k=0}^{terms-1} (μ·dP_l)·P^k for every derivative matrix dP_l.
/// Each dP_l must have zero row sums (derivative of a stochastic matrix).
std::vector<Vector> stationary_grad(const Matrix& P, const Vector& mu, const std::vector<Matrix>& dP, int terms = 30);

/// Second derivatives of μ for a transition matrix that is linear in θ:
/// ∂²μ/∂θ_l∂θ_r = Σ_k (∂_lμ·∂_rP + ∂_rμ·∂_lP)·P^k. Returned row-major in (l, r).
std::vector<Vector> stationary_hess(const Matrix& P, const std::vector<Vector>& dmu, const std::vector<Matrix>& dP,
                                    int terms = 30);

/// Dobrushin ergodic coefficient: max over row pairs of the total-variation distance.
double dobrushin(const Matrix& P);

struct DoeblinCertificate {
  int n0 = 1;
  double kappa = 0.0;
  Vector nu0;

  // (1 − κ)^{⌊k/n0⌋}
  double contraction(int k) const;
  // 1 + 2 n0 / (1 − √(1 − κ)), the factor shared by every covariance bound.
  double covariance_factor() const;
};

/// First n0 ≤ n0_max for which P^{n0} ≥ κ·uniform with κ = m·min P^{n0}(i,j) > 0.
std::optional<DoeblinCertificate> doeblin_search(const Matrix& P, int n0_max);

Matrix matrix_power(const Matrix& P, int k);

}  // namespace hmmee
