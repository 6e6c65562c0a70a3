#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hmmee {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class FamilyKind { poisson, gaussian_known_var, gaussian_full, categorical };
enum class ReferenceMeasure { counting, lebesgue };

/// Emission density family q_β(y) together with its reference measure.
///
/// Parameterizations:
///   poisson             β = (rate),                 counting measure on ℕ
///   gaussian_known_var  β = (mean), σ² fixed         Lebesgue measure on ℝ
///   gaussian_full       β = (mean, 1/(2σ²))          Lebesgue measure on ℝ
///   categorical         β = probability vector (K)  counting measure on {0..K-1}
///
/// Derivatives are taken with respect to the θ-coordinates of β. These are the
/// stored coordinates except for categorical, where the last probability is
/// implied by the others and only the first K-1 enter θ.
class SignalFamily {
 public:
  static SignalFamily poisson();
  static SignalFamily gaussian_known_var(double sigma2);
  static SignalFamily gaussian_known_var(std::vector<double> sigma2_per_state);
  static SignalFamily gaussian_full();
  static SignalFamily categorical(int num_symbols);

  FamilyKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;
  int beta_dim() const noexcept;
  int theta_dim() const noexcept;
  ReferenceMeasure reference_measure() const noexcept;
  bool discrete() const noexcept { return reference_measure() == ReferenceMeasure::counting; }
  int num_symbols() const noexcept { return num_symbols_; }
  const std::vector<double>& sigma2() const noexcept { return sigma2_; }
  // Known variance for `state` (gaussian_known_var); shared when only one is given.
  double sigma2_for(int state) const;

  bool beta_in_domain(const Vector& beta) const noexcept;
  void check_beta(const Vector& beta) const;
  // Expands θ-coordinates (length theta_dim) into a stored β (length beta_dim).
  Vector beta_from_coords(const Vector& coords) const;

  double log_density(const Vector& beta, double y, int state = 0) const;
  double density(const Vector& beta, double y, int state = 0) const;
  void grad_log_into(const Vector& beta, double y, int state, Eigen::Ref<Vector> out) const;
  void hess_log_into(const Vector& beta, double y, int state, Eigen::Ref<Matrix> out) const;
  Vector grad_log(const Vector& beta, double y, int state = 0) const;
  Matrix hess_log(const Vector& beta, double y, int state = 0) const;

  friend bool operator==(const SignalFamily&, const SignalFamily&) = default;

 private:
  SignalFamily(FamilyKind kind, int num_symbols, std::vector<double> sigma2)
      : kind_(kind), num_symbols_(num_symbols), sigma2_(std::move(sigma2)) {}

  FamilyKind kind_;
  int num_symbols_ = 0;
  std::vector<double> sigma2_;
};

// Free-function forms of the SignalFamily members.
double signal_density(const SignalFamily& family, const Vector& beta, double y);
Vector signal_grad_log(const SignalFamily& family, const Vector& beta, double y);
Matrix signal_hess_log(const SignalFamily& family, const Vector& beta, double y);

/// Upper index of a truncated Poisson support: the smallest y with
/// P(Y > y) < tail for a Poisson(rate) variable.
int poisson_support_max(double rate, double tail = 1e-12);

enum class StateOrder { ascending, descending, none };

std::string_view to_string(StateOrder order) noexcept;
StateOrder state_order_from_string(std::string_view s);

/// Admissible parameter set Θ: a box for every β coordinate, a minimum
/// separation between the states' β, a floor on transition probabilities and
/// the (lexicographic) order the states must follow.
struct ParameterDomain {
  Vector beta_lo;  // per stored β coordinate; empty means unbounded
  Vector beta_hi;
  double delta_sep = 0.0;
  double p_floor = 0.0;
  StateOrder order = StateOrder::ascending;
  std::vector<bool> beta_free;  // per θ-coordinate of β; empty means all free

  bool coord_free(int k) const noexcept {
    return beta_free.empty() || beta_free[static_cast<std::size_t>(k)];
  }
};

struct HmmModel {
  Matrix P;
  std::vector<Vector> betas;
  SignalFamily family = SignalFamily::poisson();
  ParameterDomain domain;

  int num_states() const noexcept { return static_cast<int>(P.rows()); }
};

/// Index map of the flat parameter vector
///   θ = (p_ij for i≠j, row-major; free coords of β_1; ...; free coords of β_m).
class ThetaLayout {
 public:
  ThetaLayout(int num_states, const SignalFamily& family, const ParameterDomain& domain);
  explicit ThetaLayout(const HmmModel& model)
      : ThetaLayout(model.num_states(), model.family, model.domain) {}

  int size() const noexcept { return num_transition() + num_beta(); }
  int num_states() const noexcept { return m_; }
  int num_transition() const noexcept { return m_ * (m_ - 1); }
  int num_beta() const noexcept { return m_ * free_dim(); }
  int free_dim() const noexcept { return static_cast<int>(free_coords_.size()); }
  // θ-coordinates of β (0..theta_dim-1) that are free.
  const std::vector<int>& free_coords() const noexcept { return free_coords_; }

  std::pair<int, int> transition(int l) const noexcept { return transitions_[static_cast<std::size_t>(l)]; }
  int transition_index(int i, int j) const noexcept;
  int beta_index(int state, int free_k) const noexcept { return num_transition() + state * free_dim() + free_k; }

 private:
  int m_;
  std::vector<int> free_coords_;
  std::vector<std::pair<int, int>> transitions_;
};

Vector theta_pack(const HmmModel& model);
// Rebuilds a model from θ using `shape` for m, family, domain and fixed coordinates.
// No projection or validation is applied.
HmmModel theta_unpack(const Vector& theta, const HmmModel& shape);

struct Violation {
  std::string constraint;
  int index = -1;  // 1-based state index, -1 when not tied to one state
  std::string message;
};

std::vector<Violation> validate(const HmmModel& model);

// Lexicographic order on β vectors.
bool beta_less(const Vector& a, const Vector& b) noexcept;

}  // namespace hmmee
