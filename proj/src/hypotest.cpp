#include "hmmee/hypotest.hpp"

#include "hmmee/errors.hpp"
#include "hmmee/simulate.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace hmmee {

namespace {

void check_same_size(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ShapeError("distributions must share one index set");
}

int support_top(const HmmModel& model, double tail) {
  if (model.family.kind() == FamilyKind::categorical) return model.family.num_symbols() - 1;
  if (model.family.kind() != FamilyKind::poisson) {
    throw InputError("entropy testing needs a finite signal space; discretize continuous signals first");
  }
  int top = 0;
  for (const auto& b : model.betas) top = std::max(top, poisson_support_max(b[0], tail));
  return top;
}

double quantile(std::vector<double> v, double alpha) {
  if (v.empty()) throw InputError("quantile of an empty sample");
  const auto idx = std::min(v.size() - 1, static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(v.size()))) - 1);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
  return v[idx];
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

double kl_divergence(const Vector& nu, const Vector& mu) {
  check_same_size(nu, mu);
  double h = 0.0;
  for (Eigen::Index k = 0; k < nu.size(); ++k) {
    if (nu[k] <= 0.0) continue;
    if (mu[k] <= 0.0) return std::numeric_limits<double>::infinity();
    h += nu[k] * std::log(nu[k] / mu[k]);
  }
  return std::max(h, 0.0);
}

double chi2_divergence(const Vector& nu, const Vector& mu) {
  check_same_size(nu, mu);
  double c = 0.0;
  for (Eigen::Index k = 0; k < nu.size(); ++k) {
    const double d = nu[k] - mu[k];
    if (mu[k] <= 0.0) {
      if (nu[k] > 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    c += d * d / mu[k];
  }
  return c;
}

double tv_distance(const Vector& nu, const Vector& mu) {
  check_same_size(nu, mu);
  return 0.5 * (nu - mu).lpNorm<1>();
}

int SymbolSet::index_of(double y) const {
  const double top = catch_all ? symbols[symbols.size() - 2] : symbols.back();
  if (catch_all && y > top) {
    if (std::round(y) != y) throw DomainError("signal " + std::to_string(y) + " is not a count");
    return static_cast<int>(symbols.size()) - 1;
  }
  const double r = std::round(y);
  if (r != y || r < 0 || r > top) throw DomainError("signal " + std::to_string(y) + " outside the symbol set");
  return static_cast<int>(r);
}

SymbolSet symbol_set(const HmmModel& model, double poisson_tail, int min_top) {
  const int m = model.num_states();
  const SignalFamily& fam = model.family;
  SymbolSet S;
  const int top = std::max(support_top(model, poisson_tail), fam.kind() == FamilyKind::poisson ? min_top : 0);
  S.catch_all = fam.kind() == FamilyKind::poisson;
  const int size = top + 1 + (S.catch_all ? 1 : 0);
  S.symbols.resize(static_cast<std::size_t>(size));
  S.weights.resize(m, size);
  for (int r = 0; r < size; ++r) S.symbols[static_cast<std::size_t>(r)] = r;
  for (int a = 0; a < m; ++a) {
    const Vector& beta = model.betas[static_cast<std::size_t>(a)];
    for (int r = 0; r <= top; ++r) S.weights(a, r) = fam.density(beta, r, a);
    if (S.catch_all) {
      // Tail mass summed directly; 1 − Σ would lose it to cancellation.
      double tail = 0.0;
      for (int y = top + 1;; ++y) {
        const double t = fam.density(beta, y, a);
        tail += t;
        if (t < 1e-300 || (y > beta[0] && t < tail * 1e-17)) break;
      }
      S.weights(a, top + 1) = tail;
    }
  }
  return S;
}

Vector pair_law(const HmmModel& model, const SymbolSet& S) {
  const Vector mu = stationary(model.P).mu;
  const Matrix Q = S.weights.transpose() * (mu.asDiagonal() * model.P) * S.weights;
  const auto R = static_cast<Eigen::Index>(S.size());
  Vector out(R * R);
  for (Eigen::Index r = 0; r < R; ++r)
    for (Eigen::Index s = 0; s < R; ++s) out[r * R + s] = Q(r, s);
  return out;
}

Vector empirical_pair_law(const PairEmpirical& data, const SymbolSet& S) {
  const auto R = static_cast<Eigen::Index>(S.size());
  Vector L = Vector::Zero(R * R);
  for (const auto& p : data.weighted_pairs()) L[S.index_of(p.y) * R + S.index_of(p.y_next)] += p.weight;
  return L / data.n();
}

LimitLawSpec zeta_covariance(const HmmModel& model, int max_lag, double poisson_tail) {
  LimitLawSpec spec;
  spec.symbols = symbol_set(model, poisson_tail);
  const SymbolSet& S = spec.symbols;
  const auto R = static_cast<Eigen::Index>(S.size());
  const Vector mu = stationary(model.P).mu;
  const Vector qfull = pair_law(model, S);
  for (Eigen::Index c = 0; c < qfull.size(); ++c)
    if (qfull[c] > 0.0) spec.cells.push_back(static_cast<int>(c));
  const auto D = static_cast<Eigen::Index>(spec.cells.size());
  spec.q.resize(D);
  Matrix f = Matrix::Zero(R * R, D);
  for (Eigen::Index j = 0; j < D; ++j) {
    spec.q[j] = qfull[spec.cells[static_cast<std::size_t>(j)]];
    f(spec.cells[static_cast<std::size_t>(j)], j) = 1.0;
  }
  spec.discarded_mass = std::max(0.0, 1.0 - qfull.sum());
  if (spec.discarded_mass > 1e-6) {
    spec.warnings.push_back("truncated support discards Q-mass " + std::to_string(spec.discarded_mass));
  }

  NodeSet ns;
  ns.nodes = S.symbols;
  ns.weights = S.weights;
  ns.exact = true;
  // Γ_ξ has an exact null direction (Σ ξ = 0); stopping the lag sum early leaves
  // an error of the stopping size there, which shows up as a negative eigenvalue.
  const LongRunCovariance lr = long_run_covariance(ns, mu, model.P, f, max_lag, 1e-16);
  spec.gamma_xi = lr.value;
  spec.lags_used = lr.lags_used;
  spec.lag_truncated = lr.truncated;
  if (lr.truncated) spec.warnings.push_back("lag truncation too small: last lag term norm " + std::to_string(lr.last_lag_norm));

  const Vector inv_sqrt = spec.q.cwiseSqrt().cwiseInverse();
  spec.gamma_zeta = inv_sqrt.asDiagonal() * spec.gamma_xi * inv_sqrt.asDiagonal();
  spec.gamma_zeta = 0.5 * (spec.gamma_zeta + spec.gamma_zeta.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(spec.gamma_zeta, Eigen::EigenvaluesOnly);
  spec.eigenvalues = es.eigenvalues();
  if (D > 0 && spec.eigenvalues.minCoeff() < -1e-10) {
    throw NumericalError("ζ covariance is not positive semidefinite (min eigenvalue " +
                         std::to_string(spec.eigenvalues.minCoeff()) + ")");
  }
  spec.eigenvalues = spec.eigenvalues.cwiseMax(0.0);
  spec.lambda_max = D > 0 ? spec.eigenvalues.maxCoeff() : 0.0;
  spec.trace = spec.gamma_zeta.trace();
  return spec;
}

std::vector<double> limit_law_sample(const LimitLawSpec& spec, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw InputError("limit_law_sample needs at least one sample");
  // |ζ|² = Σ_k λ_k Z_k² in law for ζ = Γ_ζ^{1/2} Z.
  std::vector<int> active;
  for (Eigen::Index k = 0; k < spec.eigenvalues.size(); ++k)
    if (spec.eigenvalues[k] > 0.0) active.push_back(static_cast<int>(k));
  Rng rng(seed);
  std::vector<double> out(static_cast<std::size_t>(n_samples));
  for (auto& v : out) {
    double s = 0.0;
    for (int k : active) {
      const double z = rng.normal();
      s += spec.eigenvalues[k] * z * z;
    }
    v = s;
  }
  return out;
}

ZetaBounds zeta_bounds(std::size_t num_cells, const DoeblinCertificate& cert) {
  if (!(cert.kappa > 0.0 && cert.kappa <= 1.0)) throw InputError("Doeblin κ must lie in (0, 1]");
  const double F = cert.covariance_factor();
  return {F * (static_cast<double>(num_cells) - 1.0), F};
}

double zeta_tail_bound(double c, double mean, double lambda_max) {
  if (c < 1.0) return 1.0;
  const double r = std::sqrt(c) - 1.0;
  return std::exp(-r * r * mean / (2.0 * lambda_max));
}

std::string_view to_string(QuantileMethod m) noexcept { return m == QuantileMethod::sampled ? "sampled" : "bound"; }

QuantileMethod quantile_method_from_string(std::string_view s) {
  if (s == "sampled") return QuantileMethod::sampled;
  if (s == "bound" || s == "conservative") return QuantileMethod::bound;
  throw UsageError("unknown quantile method '" + std::string(s) + "' (expected sampled or bound)");
}

double critical_value(const LimitLawSpec& spec, double alpha, const EntropyTestOptions& opts) {
  if (!(alpha > 0.5 && alpha < 1.0)) throw InputError("α must lie in (1/2, 1)");
  if (opts.method == QuantileMethod::sampled) {
    return 0.5 * quantile(limit_law_sample(spec, opts.samples, opts.seed), alpha);
  }
  // Invert the concentration bound: exp(−(√c−1)² E / 2λ) = 1 − α.
  const double E = spec.trace;
  if (!(E > 0.0)) return 0.0;
  const double root = 1.0 + std::sqrt(2.0 * spec.lambda_max * std::log(1.0 / (1.0 - alpha)) / E);
  return 0.5 * root * root * E;
}

TestReport entropy_test(const PairEmpirical& data, const LimitLawSpec& spec, double alpha, double c_alpha,
                        QuantileMethod method) {
  const auto R = static_cast<Eigen::Index>(spec.symbols.size());
  Vector q = Vector::Zero(R * R);
  for (std::size_t j = 0; j < spec.cells.size(); ++j) q[spec.cells[j]] = spec.q[static_cast<Eigen::Index>(j)];
  const Vector L = empirical_pair_law(data, spec.symbols);
  TestReport rep;
  rep.n = data.n();
  rep.entropy = kl_divergence(L, q);
  rep.statistic = rep.n * rep.entropy;
  rep.critical_value = c_alpha;
  rep.alpha = alpha;
  rep.method = method;
  rep.accept = rep.entropy <= c_alpha / rep.n;
  return rep;
}

TestReport entropy_test(const PairEmpirical& data, const HmmModel& model0, double alpha,
                        const EntropyTestOptions& opts) {
  const LimitLawSpec spec = zeta_covariance(model0, opts.max_lag);
  return entropy_test(data, spec, alpha, critical_value(spec, alpha, opts), opts.method);
}

double expected_tv_mc(const HmmModel& model, const SymbolSet& S, std::int64_t n, int reps, std::uint64_t seed) {
  if (reps < 1 || n < 1) throw InputError("expected_tv_mc needs n ≥ 1 and reps ≥ 1");
  const Vector q = pair_law(model, S);
  const Vector mu = stationary(model.P).mu;
  double total = 0.0;
  for (int r = 0; r < reps; ++r) {
    const Trajectory tr = simulate({model, mu, n, replication_seed(seed, static_cast<std::uint64_t>(r))});
    total += tv_distance(empirical_pair_law(pair_counts(tr.signals), S), q);
  }
  return total / reps;
}

Type2Result type2_bound(const HmmModel& model0, const HmmModel& model1, double n, double c_alpha,
                        const DoeblinCertificate& cert, int mc_reps, std::uint64_t seed) {
  if (!(cert.kappa > 0.0 && cert.kappa <= 1.0)) throw InputError("Doeblin κ must lie in (0, 1]");
  const int top = std::max(support_top(model0, 1e-12), support_top(model1, 1e-12));
  const SymbolSet S0 = symbol_set(model0, 1e-12, top);
  const SymbolSet S1 = symbol_set(model1, 1e-12, top);
  Type2Result out;
  out.separation = tv_distance(pair_law(model1, S1), pair_law(model0, S0));
  if (!(out.separation > 0.0)) return out;
  out.expected_tv = expected_tv_mc(model1, S1, static_cast<std::int64_t>(std::llround(n)), mc_reps, seed);
  const double bracket = out.separation - out.expected_tv - std::sqrt(c_alpha / (2.0 * n));
  if (!(bracket > 0.0)) return out;
  const double t = 1.0 + cert.n0 * (1.0 - cert.kappa) / cert.kappa;
  out.applicable = true;
  out.bound = std::min(1.0, std::exp(-n * (2.0 / (t * t)) * bracket * bracket));
  return out;
}

HmmModel discretize(const HmmModel& model, const std::vector<double>& edges) {
  const SignalFamily& fam = model.family;
  if (fam.kind() != FamilyKind::gaussian_known_var && fam.kind() != FamilyKind::gaussian_full) {
    throw InputError("discretize expects a Gaussian model");
  }
  if (edges.empty() || !std::is_sorted(edges.begin(), edges.end())) throw InputError("bin edges must be sorted and non-empty");
  const int K = static_cast<int>(edges.size()) + 1;
  HmmModel out;
  out.P = model.P;
  out.family = SignalFamily::categorical(K);
  out.domain.order = StateOrder::none;
  for (int a = 0; a < model.num_states(); ++a) {
    const Vector& beta = model.betas[static_cast<std::size_t>(a)];
    const double sd = std::sqrt(fam.kind() == FamilyKind::gaussian_full ? 0.5 / beta[1] : fam.sigma2_for(a));
    Vector p(K);
    double prev = 0.0;
    for (int k = 0; k + 1 < K; ++k) {
      const double c = normal_cdf((edges[static_cast<std::size_t>(k)] - beta[0]) / sd);
      p[k] = c - prev;
      prev = c;
    }
    p[K - 1] = 0.5 * std::erfc((edges.back() - beta[0]) / (sd * std::sqrt(2.0)));
    out.betas.push_back(p / p.sum());
  }
  return out;
}

std::vector<double> discretize_signals(const std::vector<double>& signals, const std::vector<double>& edges) {
  std::vector<double> out;
  out.reserve(signals.size());
  for (double y : signals) {
    out.push_back(static_cast<double>(std::lower_bound(edges.begin(), edges.end(), y) - edges.begin()));
  }
  return out;
}

}  // namespace hmmee
