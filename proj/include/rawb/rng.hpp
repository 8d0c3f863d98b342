#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace rawb {

// 64-bit finalizer from splitmix64; good avalanche, cheap.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based generator: the stream is fully determined by the seed, so
// any (master seed, stream id) pair yields the same draws no matter which
// thread or iteration order consumed them.  Also self-contained on purpose:
// libstdc++ distributions are not pinned across versions, and byte-identical
// reruns are part of the output contract.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  int next_int(int n) {
    if (n <= 0) throw std::invalid_argument("Rng::next_int: n must be positive");
    return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
  }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Box-Muller (cosine branch only, no cached second variate: one normal is
  // one deterministic pair of uniforms).
  double next_normal() {
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Marsaglia-Tsang squeeze for shape >= 1, boost for shape < 1.
  // shape == 0 returns exactly 0 (degenerate Dirichlet components).
  double next_gamma(double shape) {
    if (shape < 0.0 || !std::isfinite(shape))
      throw std::invalid_argument("Rng::next_gamma: shape must be finite and >= 0");
    if (shape == 0.0) return 0.0;
    if (shape < 1.0) {
      const double g = next_gamma(shape + 1.0);
      double u = next_double();
      while (u <= 0.0) u = next_double();
      return g * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = next_normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = next_double();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  std::uint64_t state_;
};

// Purpose tags for derived streams.  Every consumer of randomness owns a tag,
// so adding a new consumer never shifts the draws of the existing ones.
namespace stream_tag {
inline constexpr std::uint64_t kPath = 1;      // one Monte Carlo rollout
inline constexpr std::uint64_t kInstance = 2;  // instance generation
inline constexpr std::uint64_t kEval = 4;      // policy evaluation block
inline constexpr std::uint64_t kModel = 5;     // posterior model draws
inline constexpr std::uint64_t kBatch = 6;     // learning-episode rollouts
inline constexpr std::uint64_t kCell = 7;      // sweep cells
}  // namespace stream_tag

// Stream identifier derived from a master seed and up to three tags.
// Chained mixing keeps (seed, tag...) -> id injective in practice.
inline std::uint64_t stream_id(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                               std::uint64_t c = 0) {
  std::uint64_t h = mix64(master ^ 0x243f6a8885a308d3ULL);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return mix64(h ^ c);
}

inline Rng derive_stream(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                         std::uint64_t c = 0) {
  return Rng(stream_id(master, a, b, c));
}

// Inverse-CDF draw from one categorical row.  u in [0,1).  Falls back to the
// last strictly-positive entry so zero-probability states are never emitted
// even when the row sums to 1 only within tolerance.
inline int sample_categorical(const Eigen::Ref<const Eigen::RowVectorXd>& probs, double u) {
  double cum = 0.0;
  int last_positive = -1;
  for (int j = 0; j < probs.size(); ++j) {
    const double p = probs(j);
    if (p > 0.0) last_positive = j;
    cum += p;
    if (u < cum) return j;
  }
  if (last_positive < 0) throw std::runtime_error("sample_categorical: row has no mass");
  return last_positive;
}

}  // namespace rawb
