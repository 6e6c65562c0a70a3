#include "hmmee/model.hpp"

#include "hmmee/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace hmmee {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(√(2π))

int symbol_of(double y, int num_symbols) {
  const double r = std::round(y);
  if (r != y || r < 0 || r >= num_symbols) {
    std::ostringstream os;
    os << "signal " << y << " is not a symbol of a " << num_symbols << "-symbol alphabet";
    throw DomainError(os.str());
  }
  return static_cast<int>(r);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

SignalFamily SignalFamily::poisson() { return {FamilyKind::poisson, 0, {}}; }

SignalFamily SignalFamily::gaussian_known_var(double sigma2) {
  return gaussian_known_var(std::vector<double>{sigma2});
}

SignalFamily SignalFamily::gaussian_known_var(std::vector<double> sigma2_per_state) {
  if (sigma2_per_state.empty()) throw DomainError("gaussian_known_var needs at least one variance");
  for (double s : sigma2_per_state) {
    if (!(s > 0.0)) throw DomainError("gaussian_known_var: variance must be positive, got " + fmt(s));
  }
  return {FamilyKind::gaussian_known_var, 0, std::move(sigma2_per_state)};
}

SignalFamily SignalFamily::gaussian_full() { return {FamilyKind::gaussian_full, 0, {}}; }

SignalFamily SignalFamily::categorical(int num_symbols) {
  if (num_symbols < 2) throw DomainError("categorical family needs at least two symbols");
  return {FamilyKind::categorical, num_symbols, {}};
}

std::string_view SignalFamily::name() const noexcept {
  switch (kind_) {
    case FamilyKind::poisson: return "poisson";
    case FamilyKind::gaussian_known_var: return "gaussian_known_var";
    case FamilyKind::gaussian_full: return "gaussian_full";
    case FamilyKind::categorical: return "categorical";
  }
  return "unknown";
}

int SignalFamily::beta_dim() const noexcept {
  switch (kind_) {
    case FamilyKind::gaussian_full: return 2;
    case FamilyKind::categorical: return num_symbols_;
    default: return 1;
  }
}

int SignalFamily::theta_dim() const noexcept {
  return kind_ == FamilyKind::categorical ? num_symbols_ - 1 : beta_dim();
}

ReferenceMeasure SignalFamily::reference_measure() const noexcept {
  return (kind_ == FamilyKind::poisson || kind_ == FamilyKind::categorical) ? ReferenceMeasure::counting
                                                                             : ReferenceMeasure::lebesgue;
}

double SignalFamily::sigma2_for(int state) const {
  if (sigma2_.size() == 1) return sigma2_.front();
  if (state < 0 || static_cast<std::size_t>(state) >= sigma2_.size()) {
    throw DomainError("no known variance for state " + std::to_string(state + 1));
  }
  return sigma2_[static_cast<std::size_t>(state)];
}

bool SignalFamily::beta_in_domain(const Vector& beta) const noexcept {
  if (beta.size() != beta_dim() || !beta.allFinite()) return false;
  switch (kind_) {
    case FamilyKind::poisson: return beta[0] > 0.0;
    case FamilyKind::gaussian_known_var: return true;
    case FamilyKind::gaussian_full: return beta[1] > 0.0;
    case FamilyKind::categorical:
      return (beta.array() >= 0.0).all() && std::abs(beta.sum() - 1.0) <= 1e-9;
  }
  return false;
}

void SignalFamily::check_beta(const Vector& beta) const {
  if (beta_in_domain(beta)) return;
  std::ostringstream os;
  os << name() << ": parameter (" << beta.transpose() << ") outside the family domain";
  throw DomainError(os.str());
}

Vector SignalFamily::beta_from_coords(const Vector& coords) const {
  if (kind_ != FamilyKind::categorical) return coords;
  Vector beta(num_symbols_);
  beta.head(num_symbols_ - 1) = coords;
  beta[num_symbols_ - 1] = 1.0 - coords.sum();
  return beta;
}

double SignalFamily::log_density(const Vector& beta, double y, int state) const {
  check_beta(beta);
  switch (kind_) {
    case FamilyKind::poisson: {
      if (y < 0 || std::round(y) != y) throw DomainError("poisson signal must be a non-negative integer, got " + fmt(y));
      return -beta[0] + y * std::log(beta[0]) - std::lgamma(y + 1.0);
    }
    case FamilyKind::gaussian_known_var: {
      const double s2 = sigma2_for(state);
      const double d = y - beta[0];
      return -kLogSqrt2Pi - 0.5 * std::log(s2) - d * d / (2.0 * s2);
    }
    case FamilyKind::gaussian_full: {
      const double tau = beta[1];
      const double d = y - beta[0];
      return 0.5 * std::log(tau / std::numbers::pi) - tau * d * d;
    }
    case FamilyKind::categorical: {
      return std::log(beta[symbol_of(y, num_symbols_)]);
    }
  }
  return 0.0;
}

double SignalFamily::density(const Vector& beta, double y, int state) const {
  return std::exp(log_density(beta, y, state));
}

void SignalFamily::grad_log_into(const Vector& beta, double y, int state, Eigen::Ref<Vector> out) const {
  check_beta(beta);
  switch (kind_) {
    case FamilyKind::poisson:
      out[0] = y / beta[0] - 1.0;
      return;
    case FamilyKind::gaussian_known_var:
      out[0] = (y - beta[0]) / sigma2_for(state);
      return;
    case FamilyKind::gaussian_full: {
      const double d = y - beta[0];
      out[0] = 2.0 * beta[1] * d;
      out[1] = 0.5 / beta[1] - d * d;
      return;
    }
    case FamilyKind::categorical: {
      const int s = symbol_of(y, num_symbols_);
      const int last = num_symbols_ - 1;
      if (beta[s] <= 0.0) throw EvaluationError("categorical score at a zero-probability symbol");
      out.setZero();
      if (s == last) {
        out.setConstant(-1.0 / beta[last]);
      } else {
        out[s] = 1.0 / beta[s];
      }
      return;
    }
  }
}

void SignalFamily::hess_log_into(const Vector& beta, double y, int state, Eigen::Ref<Matrix> out) const {
  check_beta(beta);
  switch (kind_) {
    case FamilyKind::poisson:
      out(0, 0) = -y / (beta[0] * beta[0]);
      return;
    case FamilyKind::gaussian_known_var:
      out(0, 0) = -1.0 / sigma2_for(state);
      return;
    case FamilyKind::gaussian_full: {
      const double d = y - beta[0];
      out(0, 0) = -2.0 * beta[1];
      out(0, 1) = out(1, 0) = 2.0 * d;
      out(1, 1) = -0.5 / (beta[1] * beta[1]);
      return;
    }
    case FamilyKind::categorical: {
      const int s = symbol_of(y, num_symbols_);
      const int last = num_symbols_ - 1;
      if (beta[s] <= 0.0) throw EvaluationError("categorical score at a zero-probability symbol");
      out.setZero();
      if (s == last) {
        out.setConstant(-1.0 / (beta[last] * beta[last]));
      } else {
        out(s, s) = -1.0 / (beta[s] * beta[s]);
      }
      return;
    }
  }
}

Vector SignalFamily::grad_log(const Vector& beta, double y, int state) const {
  Vector g(theta_dim());
  grad_log_into(beta, y, state, g);
  return g;
}

Matrix SignalFamily::hess_log(const Vector& beta, double y, int state) const {
  Matrix h(theta_dim(), theta_dim());
  hess_log_into(beta, y, state, h);
  return h;
}

double signal_density(const SignalFamily& family, const Vector& beta, double y) {
  return family.density(beta, y);
}

Vector signal_grad_log(const SignalFamily& family, const Vector& beta, double y) {
  if (family.density(beta, y) <= 0.0) throw EvaluationError("score requested where the density is zero");
  return family.grad_log(beta, y);
}

Matrix signal_hess_log(const SignalFamily& family, const Vector& beta, double y) {
  if (family.density(beta, y) <= 0.0) throw EvaluationError("score requested where the density is zero");
  return family.hess_log(beta, y);
}

int poisson_support_max(double rate, double tail) {
  if (!(rate > 0.0)) throw DomainError("poisson rate must be positive");
  auto log_pmf = [rate](int k) { return -rate + k * std::log(rate) - std::lgamma(k + 1.0); };
  for (int y = static_cast<int>(std::floor(rate));; ++y) {
    // Tail terms decrease monotonically beyond the mode; sum until negligible.
    double upper = 0.0;
    for (int k = y + 1;; ++k) {
      const double term = std::exp(log_pmf(k));
      upper += term;
      if (term < 1e-30 || term < upper * 1e-17) break;
    }
    if (upper < tail) return y;
  }
}

std::string_view to_string(StateOrder order) noexcept {
  switch (order) {
    case StateOrder::ascending: return "ascending";
    case StateOrder::descending: return "descending";
    case StateOrder::none: return "none";
  }
  return "none";
}

StateOrder state_order_from_string(std::string_view s) {
  if (s == "ascending") return StateOrder::ascending;
  if (s == "descending") return StateOrder::descending;
  if (s == "none") return StateOrder::none;
  throw UsageError("unknown state order '" + std::string(s) + "'");
}

ThetaLayout::ThetaLayout(int num_states, const SignalFamily& family, const ParameterDomain& domain)
    : m_(num_states) {
  if (!domain.beta_free.empty() && static_cast<int>(domain.beta_free.size()) != family.theta_dim()) {
    throw ShapeError("beta_free mask has " + std::to_string(domain.beta_free.size()) + " entries, family has " +
                     std::to_string(family.theta_dim()) + " θ-coordinates");
  }
  for (int k = 0; k < family.theta_dim(); ++k) {
    if (domain.coord_free(k)) free_coords_.push_back(k);
  }
  for (int i = 0; i < m_; ++i) {
    for (int j = 0; j < m_; ++j) {
      if (i != j) transitions_.emplace_back(i, j);
    }
  }
}

int ThetaLayout::transition_index(int i, int j) const noexcept {
  // Row i contributes m-1 entries; the diagonal is skipped.
  return i * (m_ - 1) + (j < i ? j : j - 1);
}

Vector theta_pack(const HmmModel& model) {
  const ThetaLayout layout(model);
  Vector theta(layout.size());
  for (int l = 0; l < layout.num_transition(); ++l) {
    const auto [i, j] = layout.transition(l);
    theta[l] = model.P(i, j);
  }
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int k = 0; k < layout.free_dim(); ++k) {
      theta[layout.beta_index(s, k)] = model.betas[static_cast<std::size_t>(s)][layout.free_coords()[k]];
    }
  }
  return theta;
}

HmmModel theta_unpack(const Vector& theta, const HmmModel& shape) {
  const ThetaLayout layout(shape);
  if (theta.size() != layout.size()) {
    throw ShapeError("θ has length " + std::to_string(theta.size()) + ", model needs " + std::to_string(layout.size()));
  }
  HmmModel out = shape;
  const int m = layout.num_states();
  out.P.setZero(m, m);
  for (int l = 0; l < layout.num_transition(); ++l) {
    const auto [i, j] = layout.transition(l);
    out.P(i, j) = theta[l];
  }
  for (int i = 0; i < m; ++i) {
    double off = 0.0;
    for (int j = 0; j < m; ++j) {
      if (j != i) off += out.P(i, j);
    }
    out.P(i, i) = 1.0 - off;
  }
  const SignalFamily& fam = shape.family;
  for (int s = 0; s < m; ++s) {
    const Vector& old = shape.betas[static_cast<std::size_t>(s)];
    Vector coords = old.head(fam.theta_dim());
    for (int k = 0; k < layout.free_dim(); ++k) coords[layout.free_coords()[k]] = theta[layout.beta_index(s, k)];
    out.betas[static_cast<std::size_t>(s)] = fam.beta_from_coords(coords);
  }
  return out;
}

bool beta_less(const Vector& a, const Vector& b) noexcept {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

std::vector<Violation> validate(const HmmModel& model) {
  std::vector<Violation> out;
  const int m = model.num_states();
  const ParameterDomain& dom = model.domain;
  if (model.P.rows() != model.P.cols()) {
    out.push_back({"shape", -1, "transition matrix is not square"});
    return out;
  }
  if (static_cast<int>(model.betas.size()) != m) {
    out.push_back({"shape", -1, "expected " + std::to_string(m) + " β vectors, got " + std::to_string(model.betas.size())});
    return out;
  }
  for (int i = 0; i < m; ++i) {
    const double sum = model.P.row(i).sum();
    if (std::abs(sum - 1.0) > 1e-12) {
      out.push_back({"row_stochastic", i + 1, "row " + std::to_string(i + 1) + " sums to " + fmt(sum)});
    }
    for (int j = 0; j < m; ++j) {
      const double p = model.P(i, j);
      if (!(p >= 0.0 && p <= 1.0)) {
        out.push_back({"probability_range", i + 1,
                       "P(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ") = " + fmt(p) + " not in [0,1]"});
      } else if (i != j && p < dom.p_floor) {
        out.push_back({"p_floor", i + 1,
                       "P(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ") = " + fmt(p) + " below floor " +
                           fmt(dom.p_floor)});
      }
    }
  }
  const SignalFamily& fam = model.family;
  for (int s = 0; s < m; ++s) {
    const Vector& b = model.betas[static_cast<std::size_t>(s)];
    if (!fam.beta_in_domain(b)) {
      out.push_back({"family_domain", s + 1, "β of state " + std::to_string(s + 1) + " outside the " +
                                                 std::string(fam.name()) + " domain"});
      continue;
    }
    for (int k = 0; k < b.size(); ++k) {
      if (dom.beta_lo.size() > k && b[k] < dom.beta_lo[k]) {
        out.push_back({"beta_box", s + 1, "β" + std::to_string(s + 1) + "[" + std::to_string(k) + "] = " + fmt(b[k]) +
                                              " below " + fmt(dom.beta_lo[k])});
      }
      if (dom.beta_hi.size() > k && b[k] > dom.beta_hi[k]) {
        out.push_back({"beta_box", s + 1, "β" + std::to_string(s + 1) + "[" + std::to_string(k) + "] = " + fmt(b[k]) +
                                              " above " + fmt(dom.beta_hi[k])});
      }
    }
  }
  for (int s = 0; s < m; ++s) {
    for (int t = s + 1; t < m; ++t) {
      const double dist = (model.betas[static_cast<std::size_t>(s)] - model.betas[static_cast<std::size_t>(t)]).lpNorm<1>();
      if (dist < dom.delta_sep) {
        out.push_back({"beta_separation", s + 1,
                       "β separation violated between states " + std::to_string(s + 1) + " and " + std::to_string(t + 1) +
                           ": " + fmt(dist) + " < " + fmt(dom.delta_sep)});
      }
    }
  }
  for (int s = 0; s + 1 < m; ++s) {
    const Vector& a = model.betas[static_cast<std::size_t>(s)];
    const Vector& b = model.betas[static_cast<std::size_t>(s + 1)];
    const bool ok = dom.order == StateOrder::none || (dom.order == StateOrder::ascending && beta_less(a, b)) ||
                    (dom.order == StateOrder::descending && beta_less(b, a));
    if (!ok) {
      out.push_back({"state_order", s + 1, "states " + std::to_string(s + 1) + " and " + std::to_string(s + 2) +
                                               " are not in " + std::string(to_string(dom.order)) + " β order"});
    }
  }
  return out;
}

}  // namespace hmmee
