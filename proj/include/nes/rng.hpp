#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace nes {

/// splitmix64 finalizer. Fixed constants; stable across platforms and builds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Seed for the `index`-th child stream of `master`. This is the documented
/// splitting function used everywhere a family of runs is derived from one
/// master seed.
constexpr std::uint64_t split_seed(std::uint64_t master,
                                   std::uint64_t index) noexcept {
  return mix64(master ^ (0x9E3779B97F4A7C15ull * (index + 1)));
}

/// Deterministic random stream on top of std::mt19937_64.
///
/// The normal and Cauchy transforms are spelled out here instead of using
/// std::normal_distribution / std::cauchy_distribution, whose output is
/// implementation-defined; with the engine state this fixes run traces
/// bit-for-bit across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1); never returns an exact endpoint.
  double uniform_open() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  Eigen::VectorXd gaussian_vector(int d) {
    Eigen::VectorXd z(d);
    for (int i = 0; i < d; ++i) z[i] = gaussian();
    return z;
  }

  /// Standard Cauchy as a ratio of independent normals, matching the
  /// multivariate construction z = s / |n| at d = 1.
  double cauchy() {
    const double num = gaussian();
    double den = gaussian();
    while (den == 0.0) den = gaussian();
    return num / std::abs(den);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace nes
