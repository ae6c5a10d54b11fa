#include "nes/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace nes {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kScaleFloor = 1e-300;

void require_finite_vec(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite entries");
  }
}

}  // namespace

double canonical_squared_norm(const Eigen::VectorXd& z) {
  std::vector<double> v(z.data(), z.data() + z.size());
  std::sort(v.begin(), v.end(), [](double a, double b) {
    const double aa = std::abs(a), ab = std::abs(b);
    if (aa != ab) return aa > ab;
    return a < b;
  });
  double sum = 0.0;
  for (double c : v) sum += c * c;
  return sum;
}

FullGaussianState::FullGaussianState(Eigen::VectorXd mu_in, double sigma_in,
                                     Eigen::MatrixXd b_in)
    : mu(std::move(mu_in)), sigma(sigma_in), B(std::move(b_in)) {
  require_finite_vec(mu, "FullGaussianState.mu");
  if (!std::isfinite(sigma) || sigma <= 0.0) {
    throw std::invalid_argument("FullGaussianState: sigma must be positive");
  }
  if (B.rows() != mu.size() || B.cols() != mu.size() || !B.allFinite()) {
    throw std::invalid_argument("FullGaussianState: bad transformation matrix");
  }
  // Renormalize to |det B| = 1, folding the factor into sigma. Drift below
  // 1e-9 is left alone: the invariant tolerance is 1e-6, and skipping the
  // division keeps update chains exactly equivariant under signed
  // permutations of the coordinates.
  const double mag = std::abs(B.determinant());
  if (!(mag > kScaleFloor)) {
    throw collapse_error("FullGaussianState: |det B| underflow");
  }
  if (std::abs(mag - 1.0) > 1e-9) {
    const double scale = std::pow(mag, 1.0 / dim());
    B /= scale;
    sigma *= scale;
  }
  if (!(sigma > kScaleFloor)) {
    throw collapse_error("FullGaussianState: sigma underflow");
  }
}

FullGaussianState::FullGaussianState(Eigen::VectorXd mu_in, double sigma_in)
    : FullGaussianState(Eigen::VectorXd(mu_in), sigma_in,
                        Eigen::MatrixXd::Identity(mu_in.size(),
                                                  mu_in.size())) {}

Eigen::VectorXd FullGaussianState::to_natural(const Eigen::VectorXd& x) const {
  return B.transpose().partialPivLu().solve((x - mu) / sigma);
}

double FullGaussianState::log_density(const Eigen::VectorXd& x) const {
  const int d = dim();
  const Eigen::VectorXd z = to_natural(x);
  // |det B| = 1, so log det(sigma B^T) = d log sigma.
  return -0.5 * d * std::log(2.0 * kPi) - d * std::log(sigma) -
         0.5 * z.squaredNorm();
}

SeparableState::SeparableState(Eigen::VectorXd mu_in, Eigen::VectorXd sbar_in)
    : mu(std::move(mu_in)), sbar(std::move(sbar_in)) {
  require_finite_vec(mu, "SeparableState.mu");
  require_finite_vec(sbar, "SeparableState.sbar");
  if (sbar.size() != mu.size()) {
    throw std::invalid_argument("SeparableState: dimension mismatch");
  }
  if (!(sbar.minCoeff() > kScaleFloor)) {
    throw collapse_error("SeparableState: sbar underflow");
  }
}

double SeparableState::log_density(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd z = to_natural(x);
  return -0.5 * dim() * std::log(2.0 * kPi) -
         sbar.array().log().sum() - 0.5 * z.squaredNorm();
}

CauchyState::CauchyState(Eigen::VectorXd mu_in, Eigen::MatrixXd a_in)
    : mu(std::move(mu_in)), A(std::move(a_in)) {
  require_finite_vec(mu, "CauchyState.mu");
  if (A.rows() != mu.size() || A.cols() != mu.size() || !A.allFinite()) {
    throw std::invalid_argument("CauchyState: bad transformation matrix");
  }
  if (!(std::abs(A.determinant()) > kScaleFloor)) {
    throw collapse_error("CauchyState: |det A| underflow");
  }
}

Eigen::VectorXd CauchyState::to_natural(const Eigen::VectorXd& x) const {
  return A.transpose().partialPivLu().solve(x - mu);
}

double CauchyState::log_density(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd z = to_natural(x);
  const CauchyRadial q(dim());
  return radial_log_density(q, z) - std::log(std::abs(A.determinant()));
}

Draws sample_full(const FullGaussianState& state, Rng& rng, int n) {
  if (n < 1) throw std::invalid_argument("sample_full: n must be >= 1");
  const int d = state.dim();
  Draws out;
  out.z.resize(n, d);
  out.x.resize(n, d);
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd z = rng.gaussian_vector(d);
    out.z.row(k) = z;
    out.x.row(k) = state.to_search(z);
  }
  return out;
}

NaturalGradientPair gaussian_natural_log_derivs(const Eigen::VectorXd& z) {
  require_finite_vec(z, "gaussian_natural_log_derivs");
  const int d = static_cast<int>(z.size());
  NaturalGradientPair g;
  g.g_delta = z;
  g.g_M = 0.5 * (z * z.transpose() - Eigen::MatrixXd::Identity(d, d));
  return g;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> separable_log_derivs(
    const Eigen::VectorXd& z) {
  require_finite_vec(z, "separable_log_derivs");
  return {z, z.array().square() - 1.0};
}

GaussianRadial::GaussianRadial(int d)
    : log_norm_(-0.5 * d * std::log(2.0 * kPi)) {}

double GaussianRadial::q(double r2) const {
  return std::exp(log_norm_ - 0.5 * r2);
}

double GaussianRadial::dq(double r2) const { return -0.5 * q(r2); }

CauchyRadial::CauchyRadial(int d)
    : d_(d),
      log_norm_(std::lgamma(0.5 * (d + 1)) -
                0.5 * (d + 1) * std::log(kPi)) {}

double CauchyRadial::q(double r2) const {
  return std::exp(log_norm_ - 0.5 * (d_ + 1) * std::log1p(r2));
}

double CauchyRadial::dq(double r2) const {
  return -0.5 * (d_ + 1) * q(r2) / (r2 + 1.0);
}

NaturalGradientPair radial_log_derivs(const RadialFamily& family,
                                      const Eigen::VectorXd& z) {
  require_finite_vec(z, "radial_log_derivs");
  const int d = static_cast<int>(z.size());
  const double r2 = canonical_squared_norm(z);
  const double qv = family.q(r2);
  if (!(qv > 0.0)) {
    throw degenerate_density_error("radial_log_derivs: q(r^2) == 0");
  }
  const double ratio = family.dq(r2) / qv;
  NaturalGradientPair g;
  g.g_delta = -2.0 * ratio * z;
  g.g_M = -0.5 * Eigen::MatrixXd::Identity(d, d) - ratio * (z * z.transpose());
  if (family.tau_dim() > 0) {
    g.g_tau = family.grad_tau(r2) / qv;
  }
  return g;
}

NaturalGradientPair cauchy_log_derivs(const Eigen::VectorXd& z) {
  require_finite_vec(z, "cauchy_log_derivs");
  const int d = static_cast<int>(z.size());
  const double r2 = canonical_squared_norm(z);
  const double c = (d + 1.0) / (r2 + 1.0);
  NaturalGradientPair g;
  g.g_delta = c * z;
  g.g_M =
      0.5 * c * (z * z.transpose()) - 0.5 * Eigen::MatrixXd::Identity(d, d);
  return g;
}

double radial_log_density(const RadialFamily& family,
                          const Eigen::VectorXd& z) {
  const double qv = family.q(canonical_squared_norm(z));
  if (!(qv > 0.0)) {
    throw degenerate_density_error("radial_log_density: q(r^2) == 0");
  }
  return std::log(qv);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_cauchy(
    const CauchyState& state, Rng& rng) {
  const int d = state.dim();
  const Eigen::VectorXd s = rng.gaussian_vector(d);
  double n = rng.gaussian();
  while (n == 0.0) n = rng.gaussian();
  const Eigen::VectorXd z = s / std::abs(n);
  return {z, state.to_search(z)};
}

double radius_density(const RadialFamily& family, double r2, int d) {
  if (r2 < 0.0) throw std::invalid_argument("radius_density: r2 < 0");
  const double log_shell = std::log(2.0) + 0.5 * d * std::log(kPi) -
                           std::lgamma(0.5 * d);
  const double power =
      (r2 == 0.0 && d == 1) ? 1.0 : std::pow(r2, 0.5 * (d - 1));
  return std::exp(log_shell) * power * family.q(r2);
}

Eigen::VectorXd woodbury_natural_gradient(const Eigen::MatrixXd& v,
                                          const Eigen::MatrixXd& c,
                                          const Eigen::VectorXd& g) {
  const int tau_dim = static_cast<int>(c.rows());
  if (c.cols() != tau_dim) {
    throw std::invalid_argument("woodbury_natural_gradient: c must be square");
  }
  if (tau_dim == 0) return g;
  const int head_dim = static_cast<int>(g.size()) - tau_dim;
  if (head_dim < 0 || v.rows() != head_dim || v.cols() != tau_dim) {
    throw std::invalid_argument(
        "woodbury_natural_gradient: inconsistent block shapes");
  }
  const Eigen::VectorXd g_head = g.head(head_dim);
  const Eigen::VectorXd g_tau = g.tail(tau_dim);

  const Eigen::MatrixXd schur = c - v.transpose() * v;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(schur);
  if (!lu.isInvertible()) {
    throw singular_fisher_error(
        "woodbury_natural_gradient: (c - v^T v) is singular");
  }
  const Eigen::VectorXd h = lu.solve(v.transpose() * g_head - g_tau);
  Eigen::VectorXd out(g.size());
  out.head(head_dim) = g_head + v * h;
  out.tail(tau_dim) = -h;
  return out;
}

}  // namespace nes
