#pragma once

#include <optional>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>

#include "nes/rng.hpp"
#include "nes/symmat.hpp"

namespace nes {

/// Degenerate scale parameter (underflowed below 1e-300).
struct collapse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// q evaluated to zero at the sample radius.
struct degenerate_density_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// (c - v^T v) not invertible in the Woodbury block solve; callers fall back
/// to the plain gradient.
struct singular_fisher_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Squared Euclidean norm summed in a canonical order (decreasing magnitude,
/// ties by value), so the value is bit-identical under coordinate
/// permutations and sign flips. Radial densities are functions of this norm
/// and inherit the exact symmetry.
double canonical_squared_norm(const Eigen::VectorXd& z);

/// Full multivariate Gaussian search state: center mu, step size sigma, and
/// a transformation B normalized to |det B| = 1 (the normalization factor is
/// folded into sigma on construction). Samples map as x = mu + sigma B^T z
/// with z ~ N(0, I), so the covariance is sigma^2 B^T B.
struct FullGaussianState {
  Eigen::VectorXd mu;
  double sigma = 1.0;
  Eigen::MatrixXd B;

  FullGaussianState(Eigen::VectorXd mu_in, double sigma_in,
                    Eigen::MatrixXd b_in);
  FullGaussianState(Eigen::VectorXd mu_in, double sigma_in);

  int dim() const { return static_cast<int>(mu.size()); }
  /// sigma * B^T, the natural-to-search-space map.
  Eigen::MatrixXd transform() const { return sigma * B.transpose(); }
  Eigen::VectorXd to_search(const Eigen::VectorXd& z) const {
    return mu + sigma * (B.transpose() * z);
  }
  Eigen::VectorXd to_natural(const Eigen::VectorXd& x) const;
  double log_density(const Eigen::VectorXd& x) const;
};

/// Diagonal (separable) Gaussian: per-coordinate center and standard
/// deviation, x_i = mu_i + sbar_i z_i.
struct SeparableState {
  Eigen::VectorXd mu;
  Eigen::VectorXd sbar;

  SeparableState(Eigen::VectorXd mu_in, Eigen::VectorXd sbar_in);

  int dim() const { return static_cast<int>(mu.size()); }
  Eigen::VectorXd to_search(const Eigen::VectorXd& z) const {
    return mu + sbar.cwiseProduct(z);
  }
  Eigen::VectorXd to_natural(const Eigen::VectorXd& x) const {
    return (x - mu).cwiseQuotient(sbar);
  }
  double log_density(const Eigen::VectorXd& x) const;
};

/// Multivariate Cauchy: center mu and invertible transformation A, sample
/// x = A^T z + mu with z standard multivariate Cauchy.
struct CauchyState {
  Eigen::VectorXd mu;
  Eigen::MatrixXd A;

  CauchyState(Eigen::VectorXd mu_in, Eigen::MatrixXd a_in);

  int dim() const { return static_cast<int>(mu.size()); }
  Eigen::VectorXd to_search(const Eigen::VectorXd& z) const {
    return A.transpose() * z + mu;
  }
  Eigen::VectorXd to_natural(const Eigen::VectorXd& x) const;
  double log_density(const Eigen::VectorXd& x) const;
};

/// Log-derivative components in local coordinates: center part g_delta,
/// shape part g_M (symmetric), and the optional radial-shape part g_tau.
struct NaturalGradientPair {
  Eigen::VectorXd g_delta;
  Eigen::MatrixXd g_M;
  std::optional<Eigen::VectorXd> g_tau;
};

/// A batch of paired natural/search-space draws, one row per sample.
struct Draws {
  Eigen::MatrixXd z;
  Eigen::MatrixXd x;
};

/// n independent samples from the full Gaussian state.
Draws sample_full(const FullGaussianState& state, Rng& rng, int n);

/// Gaussian log-derivatives in natural coordinates:
/// g_delta = z, g_M = (z z^T - I)/2.
NaturalGradientPair gaussian_natural_log_derivs(const Eigen::VectorXd& z);

/// Per-coordinate Gaussian gradients as used by the separable update:
/// g_mu = z, g_s[i] = z_i^2 - 1.
std::pair<Eigen::VectorXd, Eigen::VectorXd> separable_log_derivs(
    const Eigen::VectorXd& z);

/// Rotationally symmetric density family: Q(z) = q_tau(||z||^2) with
/// derivative taken with respect to the squared radius, plus an optional
/// radial-shape parameter tau.
class RadialFamily {
 public:
  virtual ~RadialFamily() = default;
  virtual double q(double r2) const = 0;
  /// dq / d(r^2)
  virtual double dq(double r2) const = 0;
  virtual int tau_dim() const { return 0; }
  virtual Eigen::VectorXd grad_tau(double /*r2*/) const {
    return Eigen::VectorXd();
  }
};

/// Standard Gaussian as a radial family in dimension d.
class GaussianRadial : public RadialFamily {
 public:
  explicit GaussianRadial(int d);
  double q(double r2) const override;
  double dq(double r2) const override;

 private:
  double log_norm_;
};

/// Standard multivariate Cauchy as a radial family:
/// q(r^2) = Gamma((d+1)/2) / pi^((d+1)/2) * (r^2 + 1)^(-(d+1)/2).
class CauchyRadial : public RadialFamily {
 public:
  explicit CauchyRadial(int d);
  double q(double r2) const override;
  double dq(double r2) const override;

 private:
  int d_;
  double log_norm_;
};

/// Log-derivative components for a radial family:
///   g_delta = -2 (q'/q) z
///   g_M     = -I/2 - (q'/q) z z^T
///   g_tau   = grad_tau q / q          (when the family has tau parameters)
/// For the Gaussian family this reproduces gaussian_natural_log_derivs.
/// Throws degenerate_density_error when q(||z||^2) == 0.
NaturalGradientPair radial_log_derivs(const RadialFamily& family,
                                      const Eigen::VectorXd& z);

/// Closed-form Cauchy components:
///   g_delta = (d+1)/(||z||^2 + 1) z
///   g_M     = (d+1)/(2(||z||^2 + 1)) z z^T - I/2.
NaturalGradientPair cauchy_log_derivs(const Eigen::VectorXd& z);

/// log Q(z) for a radial family (standard coordinates); depends on z only
/// through the canonical squared norm.
double radial_log_density(const RadialFamily& family, const Eigen::VectorXd& z);

/// One sample (z, x) from the Cauchy state, z = s/|n| with s ~ N(0,I) and
/// scalar n ~ N(0,1).
std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_cauchy(
    const CauchyState& state, Rng& rng);

/// Radius density of a radial family,
///   2 pi^(d/2) / Gamma(d/2) * (r^2)^((d-1)/2) * q(r^2),
/// normalized so that integrating over the radius r in [0, inf) gives 1.
double radius_density(const RadialFamily& family, double r2, int d);

/// Applies the inverse of the block Fisher matrix F = [[I, v], [v^T, c]] to
/// g = (g_head, g_tau) via the Woodbury/Schur identity, in
/// O(d'^3 + m d') operations. v is (m - d') x d', c is d' x d'. With d' = 0
/// this is the identity. Throws singular_fisher_error when (c - v^T v) is
/// not invertible.
Eigen::VectorXd woodbury_natural_gradient(const Eigen::MatrixXd& v,
                                          const Eigen::MatrixXd& c,
                                          const Eigen::VectorXd& g);

}  // namespace nes
