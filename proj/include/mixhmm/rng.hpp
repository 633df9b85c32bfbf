#ifndef MIXHMM_RNG_HPP
#define MIXHMM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

#include "mixhmm/types.hpp"

namespace mixhmm {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Random stream with hand-rolled samplers so that output is identical across
// standard-library implementations. Substreams are derived from the root seed,
// never by consuming state, so forked tasks stay reproducible under any
// scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  /// Deterministic child stream; independent of this stream's position.
  Rng fork(std::uint64_t salt) const {
    return Rng(splitmix64(seed_ ^ (0x9E3779B97F4A7C15ULL * (salt + 1))));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (one value per call, no cached state).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Gamma(shape, rate) by Marsaglia-Tsang squeeze.
  double gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
      throw InputError("gamma sample requires shape > 0 and rate > 0");
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x;
      double v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v))
        return d * v / rate;
    }
  }

  /// Index h with probability probs[h]; probs must sum to 1.
  int categorical(const Vector& probs) {
    const double u = uniform();
    double cum = 0.0;
    for (Index h = 0; h < probs.size(); ++h) {
      cum += probs[h];
      if (u < cum) return static_cast<int>(h);
    }
    return static_cast<int>(probs.size() - 1);
  }

  /// Symmetric Dirichlet(1) point on the (size-1)-simplex.
  Vector dirichlet(Index size) {
    Vector v(size);
    for (Index i = 0; i < size; ++i) v[i] = gamma(1.0, 1.0);
    return v / v.sum();
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace mixhmm

#endif
