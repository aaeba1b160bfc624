#ifndef ASCKIT_RNG_HPP
#define ASCKIT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace asckit {

// Seeded generator with hand-rolled distributions so that a given seed
// produces the same stream regardless of the standard library build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  // Box-Muller, stateless pair generation.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Dirichlet(alpha, ..., alpha) via Gamma(alpha) marginals (Marsaglia-Tsang;
  // boosted for alpha < 1).
  std::vector<double> dirichlet(std::size_t k, double alpha) {
    std::vector<double> g(k);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      g[i] = gamma_variate(alpha);
      total += g[i];
    }
    if (total <= 0.0) {
      for (auto& v : g) v = 1.0 / static_cast<double>(k);
      return g;
    }
    for (auto& v : g) v /= total;
    return g;
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

 private:
  double gamma_variate(double alpha) {
    if (alpha < 1.0) {
      const double u = uniform();
      return gamma_variate(alpha + 1.0) * std::pow(u > 0 ? u : 0x1.0p-53, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  std::mt19937_64 engine_;
};

}  // namespace asckit

#endif
