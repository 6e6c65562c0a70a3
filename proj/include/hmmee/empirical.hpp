#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace hmmee {

enum class PairMode { counts, stream };

struct WeightedPair {
  double y = 0.0;
  double y_next = 0.0;
  double weight = 0.0;  // count (or mass times n for exact-distribution data)
};

using PairKey = std::pair<std::int64_t, std::int64_t>;

/// The 2-gram empirical law L_n = (1/n) Σ_k δ_(y_{k-1}, y_k).
///
/// Counts mode keeps a sparse map of distinct pairs (discrete signals only);
/// stream mode keeps the sequence and exposes its n contiguous pairs.
class PairEmpirical {
 public:
  static PairEmpirical counts(std::span<const double> signals);
  static PairEmpirical stream(std::vector<double> signals);
  // Counts-mode object from arbitrary non-negative pair weights; n is their sum.
  static PairEmpirical from_weights(const std::map<PairKey, double>& weights);

  PairMode mode() const noexcept { return mode_; }
  double n() const noexcept { return n_; }

  // counts mode
  const std::map<PairKey, double>& count_map() const noexcept { return counts_; }
  double probability(std::int64_t y, std::int64_t y_next) const;

  // stream mode
  std::size_t num_pairs() const noexcept { return signals_.empty() ? 0 : signals_.size() - 1; }
  std::pair<double, double> pair(std::size_t k) const { return {signals_[k], signals_[k + 1]}; }
  const std::vector<double>& signals() const noexcept { return signals_; }

  // Distinct pairs with their weights (counts) or every pair with weight 1 (stream).
  const std::vector<WeightedPair>& weighted_pairs() const noexcept { return pairs_; }

  /// Σ_{(y,y')} L(y,y') f(y,y'), the expectation of f under L.
  template <class F>
  double expectation(F&& f) const {
    double s = 0.0;
    for (const auto& p : pairs_) s += p.weight * f(p.y, p.y_next);
    return s / n_;
  }

  // "y,y_next,count" with a header line; counts mode only.
  void write_counts_csv(std::ostream& os) const;

 private:
  PairMode mode_ = PairMode::counts;
  double n_ = 0.0;
  std::map<PairKey, double> counts_;
  std::vector<double> signals_;
  std::vector<WeightedPair> pairs_;
};

PairEmpirical pair_counts(std::span<const double> signals);
PairEmpirical pair_stream(std::vector<double> signals);

}  // namespace hmmee
