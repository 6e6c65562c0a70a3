#pragma once

#include "hmmee/asymptotics.hpp"
#include "hmmee/empirical.hpp"
#include "hmmee/markov.hpp"
#include "hmmee/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hmmee {

// Divergences between finite distributions indexed alike.
double kl_divergence(const Vector& nu, const Vector& mu);    // H(ν|μ), +∞ without absolute continuity
double chi2_divergence(const Vector& nu, const Vector& mu);  // Σ (ν−μ)²/μ
double tv_distance(const Vector& nu, const Vector& mu);      // ½ Σ |ν−μ|

/// Finite signal alphabet used for testing: the family's symbols, or the
/// truncated Poisson support followed by one catch-all symbol for the tail.
struct SymbolSet {
  std::vector<double> symbols;  // catch-all (if any) is the last entry, stored as top + 1
  bool catch_all = false;
  Matrix weights;               // m × |S|, state-conditional laws (rows sum to 1)

  std::size_t size() const noexcept { return symbols.size(); }
  // Index of a signal value; values beyond the truncation map to the catch-all.
  int index_of(double y) const;
};

SymbolSet symbol_set(const HmmModel& model, double poisson_tail = 1e-12, int min_top = 0);

/// Cells (y, y') of the pair space, row-major in symbol indices.
Vector pair_law(const HmmModel& model, const SymbolSet& S);
Vector empirical_pair_law(const PairEmpirical& data, const SymbolSet& S);

struct LimitLawSpec {
  SymbolSet symbols;
  std::vector<int> cells;  // row-major cell ids (r·|S| + s) with positive Q-mass
  Vector q;                // Q_θ0 on those cells
  Matrix gamma_xi;
  Matrix gamma_zeta;       // diag(Q)^{-1/2} Γ_ξ diag(Q)^{-1/2}
  Vector eigenvalues;      // of Γ_ζ, clipped at 0, ascending
  double lambda_max = 0.0;
  double trace = 0.0;
  double discarded_mass = 0.0;
  int lags_used = 0;
  bool lag_truncated = false;
  std::vector<std::string> warnings;
};

LimitLawSpec zeta_covariance(const HmmModel& model, int max_lag = 200, double poisson_tail = 1e-12);

/// Samples of |ζ|² for ζ ~ N(0, Γ_ζ).
std::vector<double> limit_law_sample(const LimitLawSpec& spec, int n_samples, std::uint64_t seed);

struct ZetaBounds {
  double mean_bound = 0.0;    // F · (|S|² − 1)
  double lambda_bound = 0.0;  // F
};
ZetaBounds zeta_bounds(std::size_t num_cells, const DoeblinCertificate& cert);
/// P(|ζ|² ≥ c·E|ζ|²) ≤ exp(−(√c − 1)² E|ζ|² / (2 λ_max)), c ≥ 1.
double zeta_tail_bound(double c, double mean, double lambda_max);

enum class QuantileMethod { sampled, bound };
std::string_view to_string(QuantileMethod m) noexcept;
QuantileMethod quantile_method_from_string(std::string_view s);

struct EntropyTestOptions {
  QuantileMethod method = QuantileMethod::sampled;
  int samples = 100000;
  std::uint64_t seed = 1;
  int max_lag = 200;
};

/// Critical value c_α for the rule "accept iff H(L_n|Q_θ0) ≤ c_α / n".
double critical_value(const LimitLawSpec& spec, double alpha, const EntropyTestOptions& opts = {});

struct Type2Result {
  double bound = 1.0;
  double separation = 0.0;   // ‖Q_θ1 − Q_θ0‖_tv
  double expected_tv = 0.0;  // Ê‖L_n − Q_θ1‖_tv
  bool applicable = false;
};

struct TestReport {
  double statistic = 0.0;  // n·H(L_n | Q_θ0)
  double entropy = 0.0;    // H(L_n | Q_θ0)
  double n = 0.0;
  double critical_value = 0.0;
  bool accept = false;
  double alpha = 0.0;
  QuantileMethod method = QuantileMethod::sampled;
  std::optional<Type2Result> type2;
};

TestReport entropy_test(const PairEmpirical& data, const HmmModel& model0, double alpha,
                        const EntropyTestOptions& opts = {});
// Same test against a precomputed limit law (reused across replications).
TestReport entropy_test(const PairEmpirical& data, const LimitLawSpec& spec, double alpha, double c_alpha,
                        QuantileMethod method);

/// Monte-Carlo estimate of E‖L_n − Q_θ‖_tv under θ (stationary start).
double expected_tv_mc(const HmmModel& model, const SymbolSet& S, std::int64_t n, int reps, std::uint64_t seed);

/// exp(−n · 2/(1 + n0(1−κ)/κ)² · [c − Ê − √(c_α / 2n)]²); 1 when the bracket is not positive.
Type2Result type2_bound(const HmmModel& model0, const HmmModel& model1, double n, double c_alpha,
                        const DoeblinCertificate& cert, int mc_reps = 20, std::uint64_t seed = 1);

/// Categorical surrogate of a Gaussian model: bins (−∞, e_1], (e_1, e_2], …, (e_k, ∞).
HmmModel discretize(const HmmModel& model, const std::vector<double>& edges);
/// Bin index of each signal for the same edges.
std::vector<double> discretize_signals(const std::vector<double>& signals, const std::vector<double>& edges);

}  // namespace hmmee
