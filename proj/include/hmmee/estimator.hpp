#pragma once

#include "hmmee/empirical.hpp"
#include "hmmee/model.hpp"
#include "hmmee/pairdist.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace hmmee {

struct EstimatorConfig {
  double step = 0.001;     // ε
  int max_iters = 10000;
  double stop_tol = 1e-8;  // δ, on the gradient norm and on the windowed relative decrease
  int window = 50;
  int series_terms = 30;   // l
  int record_every = 1;
  bool line_search = false;  // Armijo backtracking instead of the fixed step
  int threads = 1;

  void check() const;
};

enum class StopReason { gradient_norm, objective_plateau, max_iters, non_finite };

std::string_view to_string(StopReason r) noexcept;

struct TraceRecord {
  int k = 0;
  Vector theta;
  double objective = 0.0;
  double grad_norm = 0.0;
  bool projected = false;  // projection changed the step that produced θ(k)
};

struct EstimationTrace {
  std::vector<TraceRecord> iterates;
  Vector theta_hat;
  HmmModel model_hat;
  double objective = 0.0;
  int iterations = 0;
  StopReason stop_reason = StopReason::max_iters;
  bool monotone = true;  // objective never increased by more than round-off
  std::string error;     // message of the evaluation error that ended the run, if any
};

/// Value and gradient of H(θ) = −Σ L(y,y') log Q_θ(y,y').
struct ObjectiveValue {
  double value = 0.0;
  Vector grad;  // ∇H (the 2RE step moves along −grad)
};

ObjectiveValue objective_and_gradient(const PairDensity& ws, const PairEmpirical& data, int threads = 1);
double objective(const PairDensity& ws, const PairEmpirical& data, int threads = 1);
double objective(const PairEmpirical& data, const HmmModel& shape, const Vector& theta, int series_terms = 30,
                 int threads = 1);

/// H(L | Q_θ) = Σ L log(L / Q_θ); counts-mode data only.
double relative_entropy_objective(const PairEmpirical& data, const HmmModel& shape, const Vector& theta,
                                  int series_terms = 30);

/// Nearest-feasible repair of an iterate; see README for the exact rules.
HmmModel project_feasible(HmmModel model);
Vector project_feasible(const Vector& theta, const HmmModel& shape);

Vector gd_step(const Vector& theta, const HmmModel& shape, const PairEmpirical& data, const EstimatorConfig& cfg);

EstimationTrace run_2re(const PairEmpirical& data, const HmmModel& start, const EstimatorConfig& cfg);

}  // namespace hmmee
