#pragma once

#include <cmath>
#include <cstdint>

namespace omm {

// Counter-based randomness: every draw is a pure function of (seed, stream,
// counter), so replays and parallel trials are reproducible by construction.

constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum class Stream : std::uint64_t {
  radius = 1,
  sign_bit = 2,
  mc_trial = 3,
  euclid_ball = 4,
  euclid_centers = 5,
  instance = 6,
  bench = 7,
};

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Stream stream, std::uint64_t lane = 0)
      : key_(mix64(seed ^ mix64(static_cast<std::uint64_t>(stream) ^
                                mix64(lane)))) {}

  std::uint64_t next_u64() { return mix64(key_ ^ ctr_++); }

  // uniform in [0,1)
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool next_bit() { return (next_u64() & 1u) != 0; }

  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

// Exponential law conditioned on [theta1, theta2].
struct TruncExp {
  double lambda;
  double theta1 = 1.0;
  double theta2 = 2.0;

  double cdf(double y) const {
    if (y <= theta1) return 0.0;
    if (y >= theta2) return 1.0;
    const double num = -std::expm1(-lambda * (y - theta1));
    const double den = -std::expm1(-lambda * (theta2 - theta1));
    return num / den;
  }

  // inverse CDF; stable for large lambda
  double quantile(double u) const {
    const double den = -std::expm1(-lambda * (theta2 - theta1));
    return theta1 - std::log1p(-u * den) / lambda;
  }

  double mean() const {
    const double a = std::exp(-lambda * theta1);
    const double b = std::exp(-lambda * theta2);
    return ((theta1 + 1.0 / lambda) * a - (theta2 + 1.0 / lambda) * b) /
           (a - b);
  }

  double sample(CounterRng& rng) const { return quantile(rng.next_unit()); }
};

}  // namespace omm
