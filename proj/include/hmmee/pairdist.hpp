#pragma once

#include "hmmee/model.hpp"

#include <vector>

namespace hmmee {

struct PairDensityOptions {
  int series_terms = 30;         // truncation of the ∂μ series
  double stationary_tol = 1e-12;
  bool second_order = false;     // also prepare ∂²μ for hess_log
};

/// Workspace for the stationary pair density
///   Q_θ(y, y') = Σ_{i,j} μ(i) p_ij q_{β_i}(y) q_{β_j}(y')
/// at one parameter value. μ and its θ-derivatives are computed once on
/// construction and reused for every pair; the object is immutable afterwards.
class PairDensity {
 public:
  explicit PairDensity(HmmModel model, PairDensityOptions opts = {});

  const HmmModel& model() const noexcept { return model_; }
  const ThetaLayout& layout() const noexcept { return layout_; }
  const Vector& mu() const noexcept { return mu_; }
  const std::vector<Vector>& dmu() const noexcept { return dmu_; }
  const std::vector<Matrix>& dP() const noexcept { return dP_; }
  int dim() const noexcept { return layout_.size(); }

  double density(double y, double y_next) const;
  double log_density(double y, double y_next) const;
  // Writes ∇_θ log Q(y, y') into `grad` and returns log Q(y, y').
  double log_density_grad(double y, double y_next, Eigen::Ref<Vector> grad) const;
  Vector grad_log(double y, double y_next) const;
  Matrix hess_log(double y, double y_next) const;

  /// Q on a grid of discrete symbols: entry (r, s) = Q(symbols[r], symbols[s]).
  Matrix table(const std::vector<double>& symbols) const;

 private:
  struct Scaled;
  Scaled scaled(double y, double y_next, bool with_grad, bool with_hess) const;

  HmmModel model_;
  ThetaLayout layout_;
  PairDensityOptions opts_;
  Vector mu_;
  std::vector<Matrix> dP_;
  std::vector<Vector> dmu_;
  std::vector<Matrix> dW_;   // ∂(μ_a p_ab)/∂θ_l, one m×m matrix per transition parameter
  std::vector<Matrix> d2W_;  // second derivatives, row-major in (l, r)
  Matrix W_;                 // μ_a p_ab
};

double q2_density(const PairDensity& ws, double y, double y_next);
Vector q2_grad_log(const PairDensity& ws, double y, double y_next);
Matrix q2_hess_log(const PairDensity& ws, double y, double y_next);

}  // namespace hmmee
