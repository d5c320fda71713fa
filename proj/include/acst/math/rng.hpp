#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

#include "acst/math/special.hpp"

// Seeded random streams with portable, implementation-independent draws.
// All non-uniform variates are produced by inversion or explicit accept/
// reject so that a seed determines the byte-identical output everywhere.

namespace acst {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t s = seed;
    std::seed_seq seq{splitmix64(s), splitmix64(s), splitmix64(s), splitmix64(s)};
    engine_.seed(seq);
  }

  // Independent stream derived from this rng's seed and a label.
  Rng substream(std::string_view name, std::uint64_t index = 0) const {
    std::uint64_t s = seed_ ^ (0x51f2cde3a9bd7e11ull + fnv1a64(name));
    std::uint64_t mixed = splitmix64(s) ^ (index * 0x9e3779b97f4a7c15ull);
    return Rng(splitmix64(mixed));
  }

  std::uint64_t raw() { return engine_(); }

  // uniform on (0,1), never returns an endpoint
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() { return norm_quantile(uniform()); }

  // standard normal conditioned on X > 0, by inversion
  double normal_positive() {
    return norm_quantile(0.5 + 0.5 * uniform());
  }

  // N(mean, sd^2) conditioned on X > 0; inversion via the upper tail,
  // stable even when mean is far below zero
  double truncated_normal_positive(double mean, double sd) {
    const double beta = mean / sd;
    const double u = uniform();
    const double q = norm_cdf(beta) * (1.0 - u);
    return mean - sd * norm_quantile(std::max(q, 1e-310));
  }

  // Marsaglia-Tsang, with the shape<1 boost; rate parameterization
  double gamma(double shape, double rate) {
    if (!(shape > 0.0 && rate > 0.0))
      throw std::domain_error("Rng::gamma: bad parameters");
    double boost = 1.0;
    double a = shape;
    if (a < 1.0) {
      boost = std::pow(uniform(), 1.0 / a);
      a += 1.0;
    }
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return boost * d * v / rate;
    }
  }

  double chi_squared(double k) { return gamma(0.5 * k, 0.5); }

  // t_1(0,1,nu) by inversion
  double student_t(double nu) { return t_quantile(uniform(), nu); }

  // t_1(0,1,nu) conditioned positive, by inversion
  double student_t_positive(double nu) {
    return t_quantile(0.5 + 0.5 * uniform(), nu);
  }

  std::string serialize() const {
    std::ostringstream os;
    os << seed_ << ' ' << engine_;
    return os.str();
  }

  static Rng deserialize(const std::string& blob) {
    std::istringstream is(blob);
    std::uint64_t seed = 0;
    is >> seed;
    Rng r(seed);
    is >> r.engine_;
    if (!is) throw std::runtime_error("Rng::deserialize: corrupt state");
    return r;
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace acst
