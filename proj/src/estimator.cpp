#include "hmmee/estimator.hpp"

#include "hmmee/errors.hpp"
#include "internal/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hmmee {

namespace {

constexpr double kPositiveFloor = 1e-10;

PairDensity make_ws(const HmmModel& shape, const Vector& theta, int series_terms) {
  PairDensityOptions opts;
  opts.series_terms = series_terms;
  return PairDensity(theta_unpack(theta, shape), opts);
}

}  // namespace

void EstimatorConfig::check() const {
  if (!(step > 0.0)) throw InputError("estimator step must be positive");
  if (!(stop_tol >= 0.0)) throw InputError("estimator stop tolerance must be non-negative");
  if (series_terms < 1) throw InputError("series truncation must be at least 1");
  if (max_iters < 0) throw InputError("max_iters must be non-negative");
  if (window < 1) throw InputError("window must be at least 1");
  if (record_every < 1) throw InputError("record_every must be at least 1");
}

std::string_view to_string(StopReason r) noexcept {
  switch (r) {
    case StopReason::gradient_norm: return "gradient_norm";
    case StopReason::objective_plateau: return "objective_plateau";
    case StopReason::max_iters: return "max_iters";
    case StopReason::non_finite: return "non_finite";
  }
  return "unknown";
}

ObjectiveValue objective_and_gradient(const PairDensity& ws, const PairEmpirical& data, int threads) {
  const auto& pairs = data.weighted_pairs();
  const int M = ws.dim();
  const std::size_t nchunks = detail::num_chunks(pairs.size());
  std::vector<double> vals(nchunks, 0.0);
  std::vector<Vector> grads(nchunks, Vector::Zero(M));
  detail::for_chunks(pairs.size(), threads, [&](std::size_t c, std::size_t b, std::size_t e) {
    Vector g(M);
    double v = 0.0;
    Vector& acc = grads[c];
    for (std::size_t k = b; k < e; ++k) {
      const auto& p = pairs[k];
      v += p.weight * ws.log_density_grad(p.y, p.y_next, g);
      acc.noalias() += p.weight * g;
    }
    vals[c] = v;
  });
  ObjectiveValue out;
  out.grad = Vector::Zero(M);
  for (std::size_t c = 0; c < nchunks; ++c) {
    out.value += vals[c];
    out.grad += grads[c];
  }
  out.value = -out.value / data.n();
  out.grad = -out.grad / data.n();
  return out;
}

double objective(const PairDensity& ws, const PairEmpirical& data, int threads) {
  const auto& pairs = data.weighted_pairs();
  std::vector<double> vals(detail::num_chunks(pairs.size()), 0.0);
  detail::for_chunks(pairs.size(), threads, [&](std::size_t c, std::size_t b, std::size_t e) {
    double v = 0.0;
    for (std::size_t k = b; k < e; ++k) v += pairs[k].weight * ws.log_density(pairs[k].y, pairs[k].y_next);
    vals[c] = v;
  });
  return -std::accumulate(vals.begin(), vals.end(), 0.0) / data.n();
}

double objective(const PairEmpirical& data, const HmmModel& shape, const Vector& theta, int series_terms,
                 int threads) {
  return objective(make_ws(shape, theta, series_terms), data, threads);
}

double relative_entropy_objective(const PairEmpirical& data, const HmmModel& shape, const Vector& theta,
                                  int series_terms) {
  if (data.mode() != PairMode::counts) throw InputError("relative entropy needs counts-mode (discrete) data");
  const PairDensity ws = make_ws(shape, theta, series_terms);
  double h = 0.0;
  for (const auto& p : data.weighted_pairs()) {
    if (p.weight <= 0.0) continue;
    const double l = p.weight / data.n();
    h += l * (std::log(l) - ws.log_density(p.y, p.y_next));
  }
  return h;
}

HmmModel project_feasible(HmmModel model) {
  const int m = model.num_states();
  const ParameterDomain& dom = model.domain;
  const double floor = dom.p_floor;

  for (int i = 0; i < m; ++i) {
    double off = 0.0;
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      model.P(i, j) = std::clamp(model.P(i, j), floor, 1.0 - floor);
      off += model.P(i, j);
    }
    if (off > 1.0 - floor && off > 0.0) {
      const double scale = (1.0 - floor) / off;
      for (int j = 0; j < m; ++j)
        if (j != i) model.P(i, j) *= scale;
      off = 1.0 - floor;
    }
    double rest = 0.0;
    for (int j = 0; j < m; ++j)
      if (j != i) rest += model.P(i, j);
    model.P(i, i) = 1.0 - rest;
  }

  const SignalFamily& fam = model.family;
  for (auto& beta : model.betas) {
    const int d = fam.kind() == FamilyKind::categorical ? fam.theta_dim() : fam.beta_dim();
    for (int k = 0; k < d; ++k) {
      double lo = dom.beta_lo.size() > k ? dom.beta_lo[k] : -std::numeric_limits<double>::infinity();
      double hi = dom.beta_hi.size() > k ? dom.beta_hi[k] : std::numeric_limits<double>::infinity();
      switch (fam.kind()) {
        case FamilyKind::poisson: lo = std::max(lo, kPositiveFloor); break;
        case FamilyKind::gaussian_full:
          if (k == 1) lo = std::max(lo, kPositiveFloor);
          break;
        case FamilyKind::categorical:
          lo = std::max(lo, 0.0);
          hi = std::min(hi, 1.0);
          break;
        case FamilyKind::gaussian_known_var: break;
      }
      beta[k] = std::clamp(beta[k], lo, hi);
    }
    if (fam.kind() == FamilyKind::categorical) {
      const int K = fam.num_symbols();
      const double last_lo = dom.beta_lo.size() >= K ? std::max(dom.beta_lo[K - 1], 0.0) : 0.0;
      Vector head = beta.head(K - 1);
      const double s = head.sum();
      if (s > 1.0 - last_lo && s > 0.0) head *= (1.0 - last_lo) / s;
      beta = fam.beta_from_coords(head);
    }
  }

  if (dom.order != StateOrder::none && m > 1) {
    std::vector<int> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), 0);
    const bool asc = dom.order == StateOrder::ascending;
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
      const auto& ba = model.betas[static_cast<std::size_t>(a)];
      const auto& bb = model.betas[static_cast<std::size_t>(b)];
      return asc ? beta_less(ba, bb) : beta_less(bb, ba);
    });
    if (!std::is_sorted(perm.begin(), perm.end())) {
      HmmModel out = model;
      for (int a = 0; a < m; ++a) {
        out.betas[static_cast<std::size_t>(a)] = model.betas[static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])];
        for (int b = 0; b < m; ++b)
          out.P(a, b) = model.P(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]);
      }
      if (!fam.sigma2().empty() && fam.sigma2().size() == static_cast<std::size_t>(m)) {
        std::vector<double> s2(static_cast<std::size_t>(m));
        for (int a = 0; a < m; ++a) s2[static_cast<std::size_t>(a)] = fam.sigma2()[static_cast<std::size_t>(perm[static_cast<std::size_t>(a)])];
        out.family = SignalFamily::gaussian_known_var(std::move(s2));
      }
      return out;
    }
  }
  return model;
}

Vector project_feasible(const Vector& theta, const HmmModel& shape) {
  return theta_pack(project_feasible(theta_unpack(theta, shape)));
}

Vector gd_step(const Vector& theta, const HmmModel& shape, const PairEmpirical& data, const EstimatorConfig& cfg) {
  if (!(cfg.step >= 0.0)) throw InputError("estimator step must be non-negative");
  const ObjectiveValue ov = objective_and_gradient(make_ws(shape, theta, cfg.series_terms), data, cfg.threads);
  return project_feasible(Vector(theta - cfg.step * ov.grad), shape);
}

EstimationTrace run_2re(const PairEmpirical& data, const HmmModel& start, const EstimatorConfig& cfg) {
  cfg.check();
  EstimationTrace tr;
  HmmModel shape = project_feasible(start);
  Vector theta = theta_pack(shape);
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(cfg.max_iters) + 1);
  bool projected = false;
  double step = cfg.step;

  auto record = [&](int k, const ObjectiveValue& ov, bool force) {
    if (force || k % cfg.record_every == 0) {
      if (!tr.iterates.empty() && tr.iterates.back().k == k) return;
      tr.iterates.push_back({k, theta, ov.value, ov.grad.norm(), projected});
    }
  };

  // Projection may relabel states; keep per-state family data in step with θ.
  auto project = [&](const Vector& raw) {
    HmmModel pm = project_feasible(theta_unpack(raw, shape));
    shape.family = pm.family;
    return theta_pack(pm);
  };

  auto evaluate = [&](const Vector& th) {
    return objective_and_gradient(make_ws(shape, th, cfg.series_terms), data, cfg.threads);
  };

  ObjectiveValue ov;
  try {
    ov = evaluate(theta);
  } catch (const EvaluationError& e) {
    tr.stop_reason = StopReason::non_finite;
    tr.error = e.what();
    tr.theta_hat = theta;
    tr.model_hat = theta_unpack(theta, shape);
    tr.objective = std::numeric_limits<double>::quiet_NaN();
    return tr;
  }
  if (!std::isfinite(ov.value)) {
    tr.stop_reason = StopReason::non_finite;
    tr.error = "objective is not finite at the starting point";
    tr.theta_hat = theta;
    tr.model_hat = theta_unpack(theta, shape);
    tr.objective = ov.value;
    return tr;
  }
  history.push_back(ov.value);
  record(0, ov, true);

  int k = 0;
  tr.stop_reason = StopReason::max_iters;
  while (true) {
    if (ov.grad.norm() < cfg.stop_tol) {
      tr.stop_reason = StopReason::gradient_norm;
      break;
    }
    if (k >= cfg.window) {
      const double before = history[static_cast<std::size_t>(k - cfg.window)];
      if ((before - ov.value) / std::max(1.0, std::abs(ov.value)) < cfg.stop_tol) {
        tr.stop_reason = StopReason::objective_plateau;
        break;
      }
    }
    if (k >= cfg.max_iters) break;

    Vector next;
    ObjectiveValue next_ov;
    try {
      if (!cfg.line_search) {
        const Vector raw = theta - cfg.step * ov.grad;
        next = project(raw);
        projected = (next - raw).norm() > 0.0;
        next_ov = evaluate(next);
      } else {
        // Armijo backtracking; the trial step grows again after each success.
        double t = std::min(step * 2.0, 1e3 * cfg.step);
        const SignalFamily family0 = shape.family;
        for (int tries = 0;; ++tries) {
          shape.family = family0;
          const Vector raw = theta - t * ov.grad;
          next = project(raw);
          next_ov = evaluate(next);
          if (std::isfinite(next_ov.value) && next_ov.value <= ov.value + 1e-4 * ov.grad.dot(next - theta)) {
            projected = (next - raw).norm() > 0.0;
            break;
          }
          if (tries >= 60) {
            projected = (next - raw).norm() > 0.0;
            break;
          }
          t *= 0.5;
        }
        step = t;
      }
    } catch (const EvaluationError& e) {
      tr.stop_reason = StopReason::non_finite;
      tr.error = e.what();
      break;
    }
    if (!std::isfinite(next_ov.value) || !next.allFinite()) {
      tr.stop_reason = StopReason::non_finite;
      tr.error = "objective became non-finite at iteration " + std::to_string(k + 1);
      break;
    }
    ++k;
    theta = std::move(next);
    if (next_ov.value > ov.value + 1e-12 * std::max(1.0, std::abs(ov.value))) tr.monotone = false;
    ov = std::move(next_ov);
    history.push_back(ov.value);
    record(k, ov, false);
  }
  record(k, ov, true);
  tr.iterations = k;
  tr.theta_hat = theta;
  tr.model_hat = theta_unpack(theta, shape);
  tr.objective = ov.value;
  return tr;
}

}  // namespace hmmee
