#pragma once

#include <cstdint>
#include <random>

#include "grpadmm/core.hpp"

namespace grpadmm {

// All generated data flows through one engine type so that a (spec, seed)
// pair reproduces bit-identical problems within one build. Normal variates
// come from std::normal_distribution over std::mt19937_64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  bool bernoulli(double p) { return std::bernoulli_distribution(p)(engine_); }

  Vector normal_vector(Index n, double stddev = 1.0) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal(0.0, stddev);
    return v;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace grpadmm
