// Deterministic counter-based pseudo-random generator and the distributions
// used by the simulation harness.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>

namespace netshift {

// Counter-based generator: draw j of a stream with key k is mix64(k + j * gamma),
// where mix64 is the SplitMix64 finalizer and gamma the golden-ratio increment.
// Every source of randomness in the project (graph construction, covariate and
// noise draws, fold assignment, replicate streams) is a named substream of one
// root seed, so results are bit-identical for a given seed on any platform.
// Nothing here touches libc or <random> engine state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix64(seed + 0x6a09e667f3bcc909ULL)) {}

  // Child stream whose draws are independent of the parent's position.
  Rng substream(std::uint64_t tag) const {
    Rng child(0);
    child.key_ = mix64(key_ ^ mix64(tag + 0xbb67ae8584caa73bULL));
    child.counter_ = 0;
    return child;
  }
  Rng substream(std::string_view name) const { return substream(fnv1a(name)); }

  std::uint64_t next() {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return mix64(key_ + counter_);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); safe as a log() argument.
  double uniform_open() {
    return (static_cast<double>(next() >> 12) + 0.5) * 0x1.0p-52;
  }

  // Unbiased integer in [0, bound) by rejection.
  std::uint64_t uniform_int(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_int: bound must be positive");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal, Box-Muller cosine branch. Two uniforms per draw keeps the
  // stream layout independent of call history.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Normal truncated symmetrically at +/- cut standard deviations, by
  // rejection; after 1000 misses the draw is clamped to the boundary.
  double truncated_normal(double mean, double sd, double cut = 6.0) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const double z = normal();
      if (std::fabs(z) <= cut) return mean + sd * z;
    }
    return mean + sd * cut;
  }

  // Marsaglia-Tsang; shape < 1 via the boost g(a+1) * u^(1/a).
  double gamma(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
      throw std::invalid_argument("gamma: shape and scale must be positive");
    if (shape < 1.0) {
      const double u = uniform_open();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
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
      const double u = uniform_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a, 1.0);
    const double y = gamma(b, 1.0);
    return x / (x + y);
  }

  // Knuth's product method; exact for moderate rates. Rates above 500 would
  // underflow exp(-lambda), so they fall back to a clamped normal approximation.
  long poisson(double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("poisson: lambda must be >= 0");
    if (lambda == 0.0) return 0;
    if (lambda > 500.0) {
      const double draw = std::floor(normal(lambda, std::sqrt(lambda)) + 0.5);
      return draw < 0.0 ? 0 : static_cast<long>(draw);
    }
    const double limit = std::exp(-lambda);
    long k = 0;
    double prod = 1.0;
    do {
      ++k;
      prod *= uniform();
    } while (prod > limit);
    return k - 1;
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace netshift
