#pragma once

#include "hmmee/model.hpp"

#include <cstdint>
#include <vector>

namespace hmmee {

/// xoshiro256** 1.0 seeded through splitmix64 ("hmmee-rng v1").
///
/// Every sampler below is implemented here rather than taken from <random> so a
/// seed yields the same bits on every platform:
///   uniform   top 53 bits of the next output, in [0, 1)
///   normal    Box–Muller, cosine branch only (one normal per two uniforms)
///   poisson   inversion for rate < 10, PTRS transformed rejection otherwise
///   discrete  inversion on the cumulative sum
class Rng {
 public:
  static constexpr int kVersion = 1;

  explicit Rng(std::uint64_t seed);

  std::uint64_t next() noexcept;
  double uniform() noexcept;
  double uniform_open() noexcept;  // (0, 1)
  double normal() noexcept;
  std::int64_t poisson(double rate) noexcept;
  int discrete(const double* probs, int size) noexcept;

 private:
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Seed of sub-stream `stream` / `index` derived from a master seed.
/// Trajectories use stream 0 for the hidden chain and (1, k) for the signal at step k.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) noexcept;

/// Seed for replication `rep` of an experiment: seed ⊕ rep.
inline std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t rep) noexcept { return seed ^ rep; }

double sample_signal(const SignalFamily& family, const Vector& beta, int state, Rng& rng);

struct SimulationConfig {
  HmmModel model;
  Vector nu;  // initial law of X_0
  std::int64_t n = 1;  // transitions; n + 1 observations
  std::uint64_t seed = 0;
};

struct Trajectory {
  std::vector<int> states;
  std::vector<double> signals;
};

Trajectory simulate(const SimulationConfig& cfg);

}  // namespace hmmee
