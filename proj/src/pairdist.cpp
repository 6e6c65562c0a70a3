#include "hmmee/pairdist.hpp"

#include "hmmee/errors.hpp"
#include "hmmee/markov.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace hmmee {

struct PairDensity::Scaled {
  Vector e, f;     // q_a(y)/max_a q_a(y) and the same for y'
  double log_scale = 0.0;
  double q_scaled = 0.0;  // Q / exp(log_scale)
  Matrix ga, gb;   // free-coordinate scores, one column per state
  std::vector<Matrix> ha, hb;
};

PairDensity::PairDensity(HmmModel model, PairDensityOptions opts)
    : model_(std::move(model)), layout_(model_), opts_(opts) {
  const int m = model_.num_states();
  if (static_cast<int>(model_.betas.size()) != m) throw ShapeError("pair density: one β per state required");
  for (const auto& b : model_.betas) model_.family.check_beta(b);
  mu_ = stationary(model_.P, opts_.stationary_tol).mu;

  const int nt = layout_.num_transition();
  dP_.reserve(static_cast<std::size_t>(nt));
  for (int l = 0; l < nt; ++l) {
    const auto [i, j] = layout_.transition(l);
    Matrix d = Matrix::Zero(m, m);
    d(i, j) = 1.0;
    d(i, i) = -1.0;
    dP_.push_back(std::move(d));
  }
  dmu_ = stationary_grad(model_.P, mu_, dP_, opts_.series_terms);

  W_ = mu_.asDiagonal() * model_.P;
  dW_.reserve(static_cast<std::size_t>(nt));
  for (int l = 0; l < nt; ++l) {
    dW_.push_back(dmu_[static_cast<std::size_t>(l)].asDiagonal() * model_.P + mu_.asDiagonal() * dP_[static_cast<std::size_t>(l)]);
  }
  if (opts_.second_order) {
    const auto d2mu = stationary_hess(model_.P, dmu_, dP_, opts_.series_terms);
    d2W_.resize(static_cast<std::size_t>(nt * nt));
    for (int l = 0; l < nt; ++l) {
      for (int r = 0; r < nt; ++r) {
        const auto lu = static_cast<std::size_t>(l), ru = static_cast<std::size_t>(r);
        d2W_[lu * nt + ru] = d2mu[lu * nt + ru].asDiagonal() * model_.P + dmu_[lu].asDiagonal() * dP_[ru] +
                             dmu_[ru].asDiagonal() * dP_[lu];
      }
    }
  }
}

PairDensity::Scaled PairDensity::scaled(double y, double y_next, bool with_grad, bool with_hess) const {
  const int m = model_.num_states();
  const SignalFamily& fam = model_.family;
  Scaled s;
  s.e.resize(m);
  s.f.resize(m);
  double smax = -std::numeric_limits<double>::infinity();
  double tmax = smax;
  for (int a = 0; a < m; ++a) {
    const Vector& beta = model_.betas[static_cast<std::size_t>(a)];
    s.e[a] = fam.log_density(beta, y, a);
    s.f[a] = fam.log_density(beta, y_next, a);
    smax = std::max(smax, s.e[a]);
    tmax = std::max(tmax, s.f[a]);
  }
  auto fail = [&] {
    std::ostringstream os;
    os.precision(17);
    os << "pair density vanishes at (y, y') = (" << y << ", " << y_next << ")";
    throw EvaluationError(os.str());
  };
  if (!std::isfinite(smax) || !std::isfinite(tmax)) fail();
  s.e = (s.e.array() - smax).exp();
  s.f = (s.f.array() - tmax).exp();
  s.log_scale = smax + tmax;
  s.q_scaled = s.e.dot(W_ * s.f);
  if (!(s.q_scaled > 0.0) || !std::isfinite(s.q_scaled)) fail();

  if (with_grad || with_hess) {
    const int td = fam.theta_dim();
    const auto& coords = layout_.free_coords();
    const int fd = layout_.free_dim();
    s.ga = Matrix::Zero(fd, m);
    s.gb = Matrix::Zero(fd, m);
    Vector full(td);
    Matrix hfull(td, td);
    if (with_hess) {
      s.ha.assign(static_cast<std::size_t>(m), Matrix::Zero(fd, fd));
      s.hb.assign(static_cast<std::size_t>(m), Matrix::Zero(fd, fd));
    }
    for (int a = 0; a < m; ++a) {
      const Vector& beta = model_.betas[static_cast<std::size_t>(a)];
      const auto au = static_cast<std::size_t>(a);
      // States with vanishing density carry zero weight in every sum below.
      if (s.e[a] > 0.0) {
        fam.grad_log_into(beta, y, a, full);
        for (int k = 0; k < fd; ++k) s.ga(k, a) = full[coords[k]];
        if (with_hess) {
          fam.hess_log_into(beta, y, a, hfull);
          for (int k = 0; k < fd; ++k)
            for (int q = 0; q < fd; ++q) s.ha[au](k, q) = hfull(coords[k], coords[q]);
        }
      }
      if (s.f[a] > 0.0) {
        fam.grad_log_into(beta, y_next, a, full);
        for (int k = 0; k < fd; ++k) s.gb(k, a) = full[coords[k]];
        if (with_hess) {
          fam.hess_log_into(beta, y_next, a, hfull);
          for (int k = 0; k < fd; ++k)
            for (int q = 0; q < fd; ++q) s.hb[au](k, q) = hfull(coords[k], coords[q]);
        }
      }
    }
  }
  return s;
}

double PairDensity::log_density(double y, double y_next) const {
  const Scaled s = scaled(y, y_next, false, false);
  return s.log_scale + std::log(s.q_scaled);
}

double PairDensity::density(double y, double y_next) const { return std::exp(log_density(y, y_next)); }

double PairDensity::log_density_grad(double y, double y_next, Eigen::Ref<Vector> grad) const {
  const Scaled s = scaled(y, y_next, true, false);
  const int m = model_.num_states();
  const int nt = layout_.num_transition();
  const double inv = 1.0 / s.q_scaled;
  for (int l = 0; l < nt; ++l) grad[l] = s.e.dot(dW_[static_cast<std::size_t>(l)] * s.f) * inv;
  // β block: Σ_b W_cb F_cb ga_c + Σ_a W_ac F_ac gb_c
  const Vector row = W_ * s.f;              // Σ_b W_cb f_b
  const Vector col = W_.transpose() * s.e;  // Σ_a W_ac e_a
  const int fd = layout_.free_dim();
  for (int c = 0; c < m; ++c) {
    for (int k = 0; k < fd; ++k) {
      grad[layout_.beta_index(c, k)] = (s.e[c] * row[c] * s.ga(k, c) + s.f[c] * col[c] * s.gb(k, c)) * inv;
    }
  }
  return s.log_scale + std::log(s.q_scaled);
}

Vector PairDensity::grad_log(double y, double y_next) const {
  Vector g(dim());
  log_density_grad(y, y_next, g);
  return g;
}

Matrix PairDensity::hess_log(double y, double y_next) const {
  if (!opts_.second_order && layout_.num_transition() > 0) {
    throw InputError("hess_log needs a workspace built with second_order = true");
  }
  const Scaled s = scaled(y, y_next, true, true);
  const int m = model_.num_states();
  const int nt = layout_.num_transition();
  const int fd = layout_.free_dim();
  const int M = dim();
  const int nb = M - nt;
  Matrix d2 = Matrix::Zero(M, M);  // ∇²Q / exp(log_scale)
  Vector d1 = Vector::Zero(M);

  Vector v(nb);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      const double F = s.e[a] * s.f[b];
      if (F == 0.0) continue;
      v.setZero();
      v.segment(a * fd, fd) += s.ga.col(a);
      v.segment(b * fd, fd) += s.gb.col(b);
      const double w = W_(a, b) * F;
      d1.tail(nb) += w * v;
      Matrix bb = v * v.transpose();
      bb.block(a * fd, a * fd, fd, fd) += s.ha[static_cast<std::size_t>(a)];
      bb.block(b * fd, b * fd, fd, fd) += s.hb[static_cast<std::size_t>(b)];
      d2.bottomRightCorner(nb, nb) += w * bb;
      for (int l = 0; l < nt; ++l) {
        const auto lu = static_cast<std::size_t>(l);
        const double dw = dW_[lu](a, b) * F;
        d1[l] += dw;
        d2.block(l, nt, 1, nb) += dw * v.transpose();
        for (int r = 0; r < nt; ++r) d2(l, r) += d2W_[lu * nt + static_cast<std::size_t>(r)](a, b) * F;
      }
    }
  }
  d2.bottomLeftCorner(nb, nt) = d2.topRightCorner(nt, nb).transpose();
  const Vector g = d1 / s.q_scaled;
  Matrix h = d2 / s.q_scaled - g * g.transpose();
  return 0.5 * (h + h.transpose());
}

Matrix PairDensity::table(const std::vector<double>& symbols) const {
  const int m = model_.num_states();
  const auto R = static_cast<Eigen::Index>(symbols.size());
  Matrix A(m, R);
  for (int a = 0; a < m; ++a) {
    for (Eigen::Index r = 0; r < R; ++r) {
      A(a, r) = model_.family.density(model_.betas[static_cast<std::size_t>(a)], symbols[static_cast<std::size_t>(r)], a);
    }
  }
  return A.transpose() * W_ * A;
}

double q2_density(const PairDensity& ws, double y, double y_next) { return ws.density(y, y_next); }

Vector q2_grad_log(const PairDensity& ws, double y, double y_next) { return ws.grad_log(y, y_next); }

Matrix q2_hess_log(const PairDensity& ws, double y, double y_next) { return ws.hess_log(y, y_next); }

}  // namespace hmmee
