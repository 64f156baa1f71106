#pragma once

// Seeded randomness. Every consumer derives its own sub-stream from the
// scenario seed and a stream name, so draws in one analysis never shift
// another's.

#include <array>
#include <cstdint>
#include <random>
#include <string_view>

#include "oncodyn/numerics.hpp"

namespace oncodyn {

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of the named sub-stream of `seed`.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name);

/// Top 53 bits of `bits` as a double in [0, 1).
double unit_double(std::uint64_t bits);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return unit_double(engine_()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Van der Corput radical inverse of `index` in `base`.
double radical_inverse(std::uint64_t index, unsigned base);

/// Three-dimensional Halton sequence (bases 2, 3, 5) with a Cranley-Patterson
/// rotation drawn from the seed.
class Halton3 {
 public:
  explicit Halton3(std::uint64_t seed);
  [[nodiscard]] std::array<double, 3> point(std::uint64_t index) const;

 private:
  std::array<double, 3> shift_{};
};

/// Uniform point on the unit sphere from two uniforms.
Vec3 sphere_point(double u, double v);

/// Uniform point in the closed unit ball from three uniforms.
Vec3 ball_point(const std::array<double, 3>& u);

}  // namespace oncodyn
