#include "oncodyn/sampling.hpp"

#include <cmath>
#include <numbers>

namespace oncodyn {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t seed, std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ h);
}

double unit_double(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

double radical_inverse(std::uint64_t index, unsigned base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

Halton3::Halton3(std::uint64_t seed) {
  std::uint64_t s = seed;
  for (auto& v : shift_) {
    s = splitmix64(s);
    v = unit_double(s);
  }
}

std::array<double, 3> Halton3::point(std::uint64_t index) const {
  static constexpr std::array<unsigned, 3> kBases{2, 3, 5};
  std::array<double, 3> u{};
  for (std::size_t d = 0; d < 3; ++d) {
    double v = radical_inverse(index + 1, kBases[d]) + shift_[d];
    if (v >= 1.0) v -= 1.0;
    u[d] = v;
  }
  return u;
}

Vec3 sphere_point(double u, double v) {
  const double z = 1.0 - 2.0 * u;
  const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = 2.0 * std::numbers::pi * v;
  return {rho * std::cos(phi), rho * std::sin(phi), z};
}

Vec3 ball_point(const std::array<double, 3>& u) {
  return std::cbrt(u[0]) * sphere_point(u[1], u[2]);
}

}  // namespace oncodyn
