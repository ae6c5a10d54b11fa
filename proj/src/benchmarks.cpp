#include "nes/benchmarks.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

#include "nes/rng.hpp"

namespace nes {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_dim(const Eigen::VectorXd& x, int at_least, const char* what) {
  if (x.size() < at_least) {
    throw std::invalid_argument(std::string(what) + ": dimension too small");
  }
}

Eigen::VectorXd shift_from_seed(int d, std::uint64_t seed) {
  Rng rng(mix64(seed ^ 0xC2B2AE3D27D4EB4Full));
  Eigen::VectorXd s(d);
  for (int i = 0; i < d; ++i) s[i] = -4.0 + 8.0 * rng.uniform();
  return s;
}

}  // namespace

double rosenbrock(const Eigen::VectorXd& x) {
  require_dim(x, 2, "rosenbrock");
  double sum = 0.0;
  for (int i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    sum += 100.0 * a * a + b * b;
  }
  return sum;
}

double f_2rosen(const Eigen::VectorXd& x) {
  require_dim(x, 2, "f_2rosen");
  const Eigen::VectorXd left = -x.array() - 10.0;
  const Eigen::VectorXd right = (x.array() - 10.0) / 4.0;
  return std::min(rosenbrock(left), 5.0 + rosenbrock(right));
}

double sphere(const Eigen::VectorXd& x) { return x.squaredNorm(); }

double ellipsoid(const Eigen::VectorXd& x) {
  const int d = static_cast<int>(x.size());
  if (d == 1) return x[0] * x[0];
  double sum = 0.0;
  for (int i = 0; i < d; ++i) {
    sum += std::pow(10.0, 6.0 * i / (d - 1)) * x[i] * x[i];
  }
  return sum;
}

double lennard_jones(const Eigen::VectorXd& flat_positions) {
  if (flat_positions.size() % 3 != 0 || flat_positions.size() < 6) {
    throw std::invalid_argument("lennard_jones: need a flat 3N vector, N >= 2");
  }
  const int n = static_cast<int>(flat_positions.size()) / 3;
  double energy = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dx = flat_positions[3 * i] - flat_positions[3 * j];
      const double dy = flat_positions[3 * i + 1] - flat_positions[3 * j + 1];
      const double dz = flat_positions[3 * i + 2] - flat_positions[3 * j + 2];
      const double r2 = dx * dx + dy * dy + dz * dz;
      if (r2 < 1e-24) return 1e30;
      const double inv6 = 1.0 / (r2 * r2 * r2);
      energy += inv6 * inv6 - inv6;
    }
  }
  return energy;
}

Eigen::MatrixXd random_rotation(int d, std::uint64_t seed) {
  Rng rng(mix64(seed ^ 0x9E3779B97F4A7C15ull));
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) g(i, j) = rng.gaussian();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

RandomBasinInstance make_random_basin(int dim, std::uint64_t seed) {
  return {dim, seed, random_rotation(dim, mix64(seed))};
}

double lattice_value(std::uint64_t seed, const Eigen::VectorXd& floored) {
  std::uint64_t h = mix64(seed ^ 0x243F6A8885A308D3ull);
  for (int i = 0; i < floored.size(); ++i) {
    h = mix64(h ^ static_cast<std::uint64_t>(
                      static_cast<long long>(floored[i])));
  }
  std::mt19937_64 twister(h);
  return static_cast<double>(twister() >> 11) * 0x1.0p-53;
}

double f_rb(const Eigen::VectorXd& x, const RandomBasinInstance& instance) {
  if (x.size() != instance.dim) {
    throw std::invalid_argument("f_rb: dimension mismatch");
  }
  const int d = instance.dim;
  const Eigen::VectorXd y = instance.rotation * x;
  Eigen::VectorXd coarse(d), fine(d);
  double sin_product = 1.0;
  for (int i = 0; i < d; ++i) {
    coarse[i] = std::floor(y[i] / 10.0);
    fine[i] = std::floor(y[i]);
    // Reduce to the nearest integer before scaling by pi so that lattice
    // points give exactly sin(0) = 0.
    const double s = std::sin(kPi * (y[i] - std::round(y[i])));
    sin_product *= std::pow(s * s, 1.0 / (20.0 * d));
  }
  return 1.0 - 0.9 * lattice_value(instance.seed, coarse) -
         0.1 * lattice_value(instance.seed, fine) * sin_product;
}

Objective standard_suite(const std::string& name, int d,
                         std::uint64_t instance_seed) {
  if (d < 1) throw std::invalid_argument("standard_suite: dim must be >= 1");
  Objective obj;
  obj.name = name;
  obj.dim = d;

  if (name == "sphere" || name == "ellipsoid") {
    const Eigen::VectorXd shift = shift_from_seed(d, instance_seed);
    auto base = (name == "sphere") ? &sphere : &ellipsoid;
    obj.eval = [base, shift](const Eigen::VectorXd& x) {
      return base(x - shift);
    };
    obj.optimum_value = 0.0;
    obj.optimum_point = shift;
  } else if (name == "rotated-ellipsoid") {
    const Eigen::VectorXd shift = shift_from_seed(d, instance_seed);
    const Eigen::MatrixXd rot = random_rotation(d, mix64(instance_seed + 1));
    obj.eval = [shift, rot](const Eigen::VectorXd& x) {
      return ellipsoid(rot * (x - shift));
    };
    obj.optimum_value = 0.0;
    obj.optimum_point = shift;
  } else if (name == "rosenbrock") {
    if (d < 2) throw std::invalid_argument("standard_suite: rosenbrock needs d >= 2");
    obj.eval = &rosenbrock;
    obj.optimum_value = 0.0;
    obj.optimum_point = Eigen::VectorXd::Ones(d);
  } else if (name == "2rosen") {
    if (d < 2) throw std::invalid_argument("standard_suite: 2rosen needs d >= 2");
    obj.eval = &f_2rosen;
    obj.optimum_value = 0.0;
    obj.optimum_point = Eigen::VectorXd::Constant(d, -11.0);
  } else if (name == "random-basin") {
    const RandomBasinInstance instance = make_random_basin(d, instance_seed);
    obj.eval = [instance](const Eigen::VectorXd& x) {
      return f_rb(x, instance);
    };
  } else if (name == "lennard-jones") {
    if (d % 3 != 0 || d < 6) {
      throw std::invalid_argument(
          "standard_suite: lennard-jones needs dim = 3N with N >= 2");
    }
    obj.eval = &lennard_jones;
    const int atoms = d / 3;
    if (atoms == 2) obj.optimum_value = -0.25;
    if (atoms == 3) obj.optimum_value = -0.75;
  } else {
    throw std::invalid_argument("standard_suite: unknown objective '" + name +
                                "'");
  }
  return obj;
}

}  // namespace nes
