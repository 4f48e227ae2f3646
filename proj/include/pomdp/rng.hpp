#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

#include <Eigen/Core>

namespace pomdp {

/// Seeded random stream. Identical seed + identical call sequence gives
/// identical draws, independent of platform (draws are built from raw
/// mt19937_64 output, not from distribution adapters).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    // rejection sampling over the top bits, no modulo bias
    const std::uint64_t bound = UINT64_MAX - UINT64_MAX % static_cast<std::uint64_t>(n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= bound);
    return static_cast<int>(x % static_cast<std::uint64_t>(n));
  }

  /// Inverse-CDF draw from an explicit probability vector. Cumulative sums
  /// are taken in index order so the result is deterministic.
  int categorical(const Eigen::VectorXd& probs) {
    const double u = uniform();
    double cum = 0.0;
    const Eigen::Index n = probs.size();
    for (Eigen::Index i = 0; i < n; ++i) {
      cum += probs[i];
      if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(n - 1);  // guard against cum < 1 round-off
  }

  /// Gamma(shape, 1) via Marsaglia-Tseng, used for Dirichlet sampling.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u <= 0 ? 1e-300 : u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Standard normal via Box-Muller (single value per call, cached pair).
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 1e-300;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

  /// Dirichlet(alpha, ..., alpha) draw of dimension n.
  Eigen::VectorXd dirichlet(int n, double alpha) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gamma(alpha);
    const double total = v.sum();
    if (total <= 0.0) return Eigen::VectorXd::Constant(n, 1.0 / n);
    return v / total;
  }

  /// Derive an independent named child stream from this stream's seed.
  RngStream fork(std::string_view tag) const {
    std::uint64_t h = seed_ ^ 0x9e3779b97f4a7c15ull;
    for (const char c : tag) {
      h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
      h *= 0x100000001b3ull;
    }
    // splitmix64 finalizer
    h += 0x9e3779b97f4a7c15ull;
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
    h = h ^ (h >> 31);
    return RngStream(h);
  }

  RngStream fork(std::string_view tag, std::uint64_t index) const {
    RngStream child = fork(tag);
    child.seed_ ^= index * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull;
    child.engine_.seed(child.seed_);
    return child;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace pomdp
