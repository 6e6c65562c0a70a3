#include "hmmee/simulate.hpp"

#include "hmmee/errors.hpp"

#include <cmath>
#include <numbers>

namespace hmmee {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t Rng::next() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform_open() noexcept { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

double Rng::normal() noexcept {
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::int64_t Rng::poisson(double rate) noexcept {
  if (rate < 10.0) {
    const double u = uniform();
    double p = std::exp(-rate);
    double cdf = p;
    std::int64_t k = 0;
    while (u > cdf && p > 0.0) {
      ++k;
      p *= rate / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }
  // Hörmann (1993) PTRS.
  const double slam = std::sqrt(rate);
  const double loglam = std::log(rate);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + rate + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <= -rate + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::int64_t>(k);
    }
  }
}

int Rng::discrete(const double* probs, int size) noexcept {
  const double u = uniform();
  double cdf = 0.0;
  for (int i = 0; i < size; ++i) {
    cdf += probs[i];
    if (u < cdf) return i;
  }
  // Rounding left u above the final cumulative sum: last state with mass.
  for (int i = size - 1; i >= 0; --i) {
    if (probs[i] > 0.0) return i;
  }
  return size - 1;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
  std::uint64_t state = seed;
  std::uint64_t h = splitmix64(state);
  state = h ^ (stream * 0xD1B54A32D192ED03ULL);
  h = splitmix64(state);
  state = h ^ (index * 0x8CB92BA72F3D8DD7ULL);
  return splitmix64(state);
}

double sample_signal(const SignalFamily& family, const Vector& beta, int state, Rng& rng) {
  switch (family.kind()) {
    case FamilyKind::poisson: return static_cast<double>(rng.poisson(beta[0]));
    case FamilyKind::gaussian_known_var: return beta[0] + std::sqrt(family.sigma2_for(state)) * rng.normal();
    case FamilyKind::gaussian_full: return beta[0] + std::sqrt(0.5 / beta[1]) * rng.normal();
    case FamilyKind::categorical: return static_cast<double>(rng.discrete(beta.data(), static_cast<int>(beta.size())));
  }
  return 0.0;
}

Trajectory simulate(const SimulationConfig& cfg) {
  const HmmModel& model = cfg.model;
  const int m = model.num_states();
  if (cfg.n < 1) throw InputError("simulate: n must be at least 1");
  if (cfg.nu.size() != m || (cfg.nu.array() < 0.0).any() || std::abs(cfg.nu.sum() - 1.0) > 1e-9) {
    throw InputError("simulate: initial distribution must be a probability vector over the states");
  }
  for (const auto& b : model.betas) model.family.check_beta(b);

  // Row-major copy so each row is contiguous for inversion.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> P = model.P;
  const auto len = static_cast<std::size_t>(cfg.n) + 1;
  Trajectory out;
  out.states.resize(len);
  out.signals.resize(len);

  Rng chain(derive_seed(cfg.seed, 0));
  int x = chain.discrete(cfg.nu.data(), m);
  for (std::size_t k = 0; k < len; ++k) {
    if (k > 0) x = chain.discrete(P.row(x).data(), m);
    out.states[k] = x;
    Rng signal(derive_seed(cfg.seed, 1, k));
    out.signals[k] = sample_signal(model.family, model.betas[static_cast<std::size_t>(x)], x, signal);
  }
  return out;
}

}  // namespace hmmee
