#include "hmmee/markov.hpp"

#include "hmmee/errors.hpp"

#include <cmath>
#include <sstream>

namespace hmmee {

StationaryResult stationary(const Matrix& P, double tol, int max_iter) {
  const auto m = P.rows();
  if (m == 0 || P.cols() != m) throw InputError("stationary: transition matrix must be square and non-empty");
  StationaryResult res;
  res.mu = Vector::Constant(m, 1.0 / static_cast<double>(m));
  for (int it = 1; it <= max_iter; ++it) {
    Vector next = P.transpose() * res.mu;
    next /= next.sum();
    res.residual = (next - res.mu).lpNorm<1>();
    res.mu = std::move(next);
    res.iterations = it;
    if (res.residual <= tol) {
      // residual of the returned vector itself
      res.residual = (P.transpose() * res.mu - res.mu).lpNorm<1>();
      if (res.residual <= tol) return res;
    }
  }
  std::ostringstream os;
  os << "stationary: power iteration did not reach tolerance " << tol << " in " << max_iter
     << " steps (residual " << res.residual << "); is the chain periodic or reducible?";
  throw NonConvergenceError(os.str());
}

namespace {

Vector series(const Matrix& P, Vector term, int terms) {
  Vector sum = Vector::Zero(term.size());
  const Matrix Pt = P.transpose();
  for (int k = 0; k < terms; ++k) {
    sum += term;
    term = Pt * term;
  }
  return sum;
}

}  // namespace

std::vector<Vector> stationary_grad(const Matrix& P, const Vector& mu, const std::vector<Matrix>& dP, int terms) {
  if (terms < 1) throw InputError("stationary_grad: truncation must be at least 1");
  std::vector<Vector> out;
  out.reserve(dP.size());
  for (std::size_t l = 0; l < dP.size(); ++l) {
    const Matrix& d = dP[l];
    if (d.rows() != P.rows() || d.cols() != P.cols()) throw InputError("stationary_grad: derivative matrix shape mismatch");
    const double worst = d.rowwise().sum().cwiseAbs().maxCoeff();
    if (worst > 1e-12) {
      std::ostringstream os;
      os << "stationary_grad: derivative matrix " << l << " has a row sum of " << worst << " (must be 0)";
      throw InputError(os.str());
    }
    out.push_back(series(P, d.transpose() * mu, terms));
  }
  return out;
}

std::vector<Vector> stationary_hess(const Matrix& P, const std::vector<Vector>& dmu, const std::vector<Matrix>& dP,
                                    int terms) {
  const std::size_t n = dP.size();
  std::vector<Vector> out(n * n);
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t r = l; r < n; ++r) {
      Vector first = dP[r].transpose() * dmu[l] + dP[l].transpose() * dmu[r];
      out[l * n + r] = series(P, std::move(first), terms);
      out[r * n + l] = out[l * n + r];
    }
  }
  return out;
}

double dobrushin(const Matrix& P) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < P.rows(); ++j) {
      worst = std::max(worst, 0.5 * (P.row(i) - P.row(j)).lpNorm<1>());
    }
  }
  return worst;
}

double DoeblinCertificate::contraction(int k) const { return std::pow(1.0 - kappa, k / n0); }

double DoeblinCertificate::covariance_factor() const {
  return 1.0 + 2.0 * n0 / (1.0 - std::sqrt(1.0 - kappa));
}

std::optional<DoeblinCertificate> doeblin_search(const Matrix& P, int n0_max) {
  const auto m = P.rows();
  Matrix power = Matrix::Identity(m, m);
  for (int n0 = 1; n0 <= n0_max; ++n0) {
    power = power * P;
    const double kappa = static_cast<double>(m) * power.minCoeff();
    if (kappa > 0.0) {
      return DoeblinCertificate{n0, std::min(kappa, 1.0), Vector::Constant(m, 1.0 / static_cast<double>(m))};
    }
  }
  return std::nullopt;
}

Matrix matrix_power(const Matrix& P, int k) {
  Matrix out = Matrix::Identity(P.rows(), P.cols());
  Matrix base = P;
  while (k > 0) {
    if (k & 1) out = out * base;
    base = base * base;
    k >>= 1;
  }
  return out;
}

}  // namespace hmmee
