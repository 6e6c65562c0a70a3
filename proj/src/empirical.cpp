#include "hmmee/empirical.hpp"

#include "hmmee/errors.hpp"

#include <cmath>
#include <ostream>

namespace hmmee {

namespace {

std::int64_t as_symbol(double y, std::size_t index) {
  if (!std::isfinite(y) || std::round(y) != y) {
    throw InputError("pair_counts: signal " + std::to_string(y) + " at position " + std::to_string(index) +
                     " is not an integer symbol");
  }
  return static_cast<std::int64_t>(y);
}

}  // namespace

PairEmpirical PairEmpirical::counts(std::span<const double> signals) {
  if (signals.size() < 2) throw InputError("pair_counts: need at least two observations");
  PairEmpirical out;
  out.mode_ = PairMode::counts;
  std::int64_t prev = as_symbol(signals[0], 0);
  for (std::size_t k = 1; k < signals.size(); ++k) {
    const std::int64_t cur = as_symbol(signals[k], k);
    out.counts_[{prev, cur}] += 1.0;
    prev = cur;
  }
  out.n_ = static_cast<double>(signals.size() - 1);
  out.pairs_.reserve(out.counts_.size());
  for (const auto& [key, c] : out.counts_) {
    out.pairs_.push_back({static_cast<double>(key.first), static_cast<double>(key.second), c});
  }
  return out;
}

PairEmpirical PairEmpirical::stream(std::vector<double> signals) {
  if (signals.size() < 2) throw InputError("pair_stream: need at least two observations");
  PairEmpirical out;
  out.mode_ = PairMode::stream;
  out.signals_ = std::move(signals);
  out.n_ = static_cast<double>(out.signals_.size() - 1);
  out.pairs_.reserve(out.signals_.size() - 1);
  for (std::size_t k = 0; k + 1 < out.signals_.size(); ++k) {
    out.pairs_.push_back({out.signals_[k], out.signals_[k + 1], 1.0});
  }
  return out;
}

PairEmpirical PairEmpirical::from_weights(const std::map<PairKey, double>& weights) {
  PairEmpirical out;
  out.mode_ = PairMode::counts;
  for (const auto& [key, w] : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("pair weights must be finite and non-negative");
    if (w == 0.0) continue;
    out.counts_[key] = w;
    out.n_ += w;
    out.pairs_.push_back({static_cast<double>(key.first), static_cast<double>(key.second), w});
  }
  if (!(out.n_ > 0.0)) throw InputError("pair weights sum to zero");
  return out;
}

double PairEmpirical::probability(std::int64_t y, std::int64_t y_next) const {
  const auto it = counts_.find({y, y_next});
  return it == counts_.end() ? 0.0 : it->second / n_;
}

void PairEmpirical::write_counts_csv(std::ostream& os) const {
  if (mode_ != PairMode::counts) throw InputError("counts export needs a counts-mode empirical law");
  os << "y,y_next,count\n";
  for (const auto& [key, c] : counts_) {
    os << key.first << ',' << key.second << ',';
    if (std::round(c) == c) {
      os << static_cast<std::int64_t>(c);
    } else {
      os.precision(17);
      os << c;
    }
    os << '\n';
  }
}

PairEmpirical pair_counts(std::span<const double> signals) { return PairEmpirical::counts(signals); }

PairEmpirical pair_stream(std::vector<double> signals) { return PairEmpirical::stream(std::move(signals)); }

}  // namespace hmmee
