#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Core>

namespace nes {

/// A benchmark objective. `eval` is deterministic per (x, instance seed).
/// `optimum_value` is set when the optimum is known exactly.
struct Objective {
  std::string name;
  int dim = 0;
  std::function<double(const Eigen::VectorXd&)> eval;
  std::optional<double> optimum_value;
  std::optional<Eigen::VectorXd> optimum_point;
  bool maximize = false;
};

/// Standard Rosenbrock, optimum 0 at the all-ones point; requires d >= 2.
double rosenbrock(const Eigen::VectorXd& x);

/// Deceptive double-funnel variant:
///   min{ rosenbrock(-x - 10), 5 + rosenbrock((x - 10)/4) },
/// component-wise transforms. Global optimum 0 at (-11, ..., -11), local
/// optimum 5 at (14, ..., 14).
double f_2rosen(const Eigen::VectorXd& x);

double sphere(const Eigen::VectorXd& x);

/// Separable ellipsoid with condition 1e6:
/// sum_i 10^(6 (i-1)/(d-1)) x_i^2.
double ellipsoid(const Eigen::VectorXd& x);

/// Lennard-Jones cluster energy over unordered atom pairs,
/// sum (1/r)^12 - (1/r)^6, for positions given as a flat 3N vector.
/// Near-coincident atoms (r < 1e-12) return the sentinel 1e30 so rankings
/// stay usable.
double lennard_jones(const Eigen::VectorXd& flat_positions);

/// Random orthonormal matrix: QR of a seeded Gaussian matrix with the sign
/// convention diag(R) > 0, making the factorization unique.
Eigen::MatrixXd random_rotation(int d, std::uint64_t seed);

/// One instance of the random-basin benchmark: a fixed rotation plus a seed
/// for the integer-lattice value generator.
struct RandomBasinInstance {
  int dim = 0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd rotation;
};

RandomBasinInstance make_random_basin(int dim, std::uint64_t seed);

/// Value generator r : Z^d -> [0, 1): a fixed multiply-xor mix of the integer
/// tuple seeds a Mersenne twister, whose first output is mapped to [0, 1).
/// Stable across processes and platforms by construction.
double lattice_value(std::uint64_t seed, const Eigen::VectorXd& floored);

/// Random-basin objective
///   1 - 0.9 r(floor(y/10)) - 0.1 r(floor(y)) prod_i (sin^2(pi y_i))^(1/(20d))
/// with y the rotated input. Values lie in (0, 1]; every unit hypercube holds
/// a local optimum whose value is uniform in [0, 1).
double f_rb(const Eigen::VectorXd& x, const RandomBasinInstance& instance);

/// Named objectives addressable from the CLI. Known names: "sphere",
/// "ellipsoid", "rotated-ellipsoid", "rosenbrock", "2rosen", "random-basin",
/// "lennard-jones". For sphere/ellipsoid variants the instance seed draws an
/// optimum shift uniform in [-4, 4]^d (and the rotation, where rotated);
/// rosenbrock/2rosen/lennard-jones are served in their standard untransformed
/// form. Unknown names throw std::invalid_argument.
Objective standard_suite(const std::string& name, int d,
                         std::uint64_t instance_seed);

}  // namespace nes
