#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "nes/distributions.hpp"
#include "nes/rng.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kPi = 3.14159265358979323846;

// ---- test-only oracles ------------------------------------------------------

// Series matrix exponential, independent of the library implementation.
MatrixXd expm_series(const MatrixXd& m, int terms = 40) {
  MatrixXd sum = MatrixXd::Identity(m.rows(), m.cols());
  MatrixXd term = MatrixXd::Identity(m.rows(), m.cols());
  for (int n = 1; n <= terms; ++n) {
    term = term * m / n;
    sum += term;
  }
  return sum;
}

// Gaussian log-density in local coordinates (A = I, mu = 0):
// log pi(x | delta, M) = -d/2 log 2pi - tr(M)/2 - ||exp(-M/2)(x - delta)||^2/2.
double logpi_gauss(const VectorXd& x, const VectorXd& delta,
                   const MatrixXd& m) {
  const int d = static_cast<int>(x.size());
  const VectorXd w = expm_series(-0.5 * m) * (x - delta);
  return -0.5 * d * std::log(2.0 * kPi) - 0.5 * m.trace() -
         0.5 * w.squaredNorm();
}

// Radial-family log-density in the same local coordinates.
double logpi_radial(const nes::RadialFamily& q, const VectorXd& x,
                    const VectorXd& delta, const MatrixXd& m) {
  const VectorXd w = expm_series(-0.5 * m) * (x - delta);
  return -0.5 * m.trace() + std::log(q.q(w.squaredNorm()));
}

// Symmetric basis directions E_ii and E_ij + E_ji.
std::vector<MatrixXd> sym_directions(int d) {
  std::vector<MatrixXd> dirs;
  for (int i = 0; i < d; ++i) {
    MatrixXd v = MatrixXd::Zero(d, d);
    v(i, i) = 1.0;
    dirs.push_back(v);
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      MatrixXd v = MatrixXd::Zero(d, d);
      v(i, j) = v(j, i) = 1.0;
      dirs.push_back(v);
    }
  }
  return dirs;
}

template <typename LogDensity>
void check_against_finite_differences(const LogDensity& logpi,
                                      const VectorXd& z,
                                      const nes::NaturalGradientPair& g,
                                      double tol = 1e-6) {
  const int d = static_cast<int>(z.size());
  const double h = 1e-5;
  const MatrixXd m0 = MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    VectorXd dp = VectorXd::Zero(d), dm = VectorXd::Zero(d);
    dp[i] = h;
    dm[i] = -h;
    const double fd = (logpi(z, dp, m0) - logpi(z, dm, m0)) / (2 * h);
    CHECK(std::abs(g.g_delta[i] - fd) < tol);
  }
  for (const MatrixXd& v : sym_directions(d)) {
    const double fd =
        (logpi(z, VectorXd::Zero(d), MatrixXd(h * v)) -
         logpi(z, VectorXd::Zero(d), MatrixXd(-h * v))) /
        (2 * h);
    const double analytic = (g.g_M.cwiseProduct(v)).sum();
    CHECK(std::abs(analytic - fd) < tol);
  }
}

double chi2_1_pdf(double u) {
  return std::exp(-0.5 * u) / std::sqrt(2.0 * kPi * u);
}

// Composite Simpson integration of f over [a, b].
template <typename F>
double simpson(const F& f, double a, double b, int intervals) {
  if (intervals % 2) ++intervals;
  const double h = (b - a) / intervals;
  double sum = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) {
    sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  }
  return sum * h / 3.0;
}

// Scale-parameterized Gaussian family q_tau(r^2), for exercising the tau
// machinery; the paper-level families carry no concrete tau.
class ScaledGaussian : public nes::RadialFamily {
 public:
  ScaledGaussian(int d, double tau) : d_(d), tau_(tau) {}
  double q(double r2) const override {
    return std::pow(2.0 * kPi * tau_, -0.5 * d_) * std::exp(-r2 / (2 * tau_));
  }
  double dq(double r2) const override { return -q(r2) / (2 * tau_); }
  int tau_dim() const override { return 1; }
  VectorXd grad_tau(double r2) const override {
    VectorXd g(1);
    g[0] = q(r2) * (-0.5 * d_ / tau_ + r2 / (2 * tau_ * tau_));
    return g;
  }

 private:
  int d_;
  double tau_;
};

}  // namespace

TEST_CASE("sample_full maps draws affinely") {
  VectorXd mu(2);
  mu << 1.0, -2.0;
  const nes::FullGaussianState state(mu, 1.0, MatrixXd::Identity(2, 2));
  CHECK((state.to_search(VectorXd::Zero(2)) - mu).norm() == 0.0);
  VectorXd e1(2);
  e1 << 1.0, 0.0;
  CHECK((state.to_search(e1) - (mu + e1)).norm() == 0.0);
}

TEST_CASE("sample_full empirical covariance matches sigma^2 B^T B") {
  nes::Rng rng(31);
  MatrixXd b(3, 3);
  b << 1.0, 0.3, 0.0, 0.1, 1.2, -0.2, 0.0, 0.4, 0.9;
  VectorXd mu(3);
  mu << 0.5, -1.0, 2.0;
  const nes::FullGaussianState state(mu, 1.7, b);
  const int n = 100000;
  const nes::Draws draws = nes::sample_full(state, rng, n);
  const Eigen::RowVectorXd mean = draws.x.colwise().mean();
  const MatrixXd centered = draws.x.rowwise() - mean;
  const MatrixXd cov = centered.transpose() * centered / (n - 1);
  const MatrixXd expected =
      state.sigma * state.sigma * state.B.transpose() * state.B;
  CHECK((cov - expected).norm() < 0.05 * expected.norm());
}

TEST_CASE("sample_full is deterministic per seed") {
  VectorXd mu = VectorXd::Zero(4);
  const nes::FullGaussianState state(mu, 2.0, MatrixXd::Identity(4, 4));
  nes::Rng a(777), b(777);
  const nes::Draws da = nes::sample_full(state, a, 16);
  const nes::Draws db = nes::sample_full(state, b, 16);
  CHECK(da.z == db.z);
  CHECK(da.x == db.x);
}

TEST_CASE("full state renormalizes |det B| to 1") {
  VectorXd mu = VectorXd::Zero(2);
  MatrixXd b(2, 2);
  b << 3.0, 0.0, 0.0, 3.0;
  const nes::FullGaussianState state(mu, 1.0, b);
  CHECK(std::abs(std::abs(state.B.determinant()) - 1.0) < 1e-12);
  CHECK(state.sigma == doctest::Approx(3.0));
  // The represented covariance is unchanged by the renormalization.
  CHECK((state.transform() - b.transpose()).norm() < 1e-12);
}

TEST_CASE("state validation") {
  VectorXd mu = VectorXd::Zero(2);
  CHECK_THROWS_AS(nes::FullGaussianState(mu, -1.0, MatrixXd::Identity(2, 2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(nes::FullGaussianState(mu, 1.0, MatrixXd::Zero(2, 2)),
                  nes::collapse_error);
  VectorXd bad_sbar(2);
  bad_sbar << 1.0, 1e-310;
  CHECK_THROWS_AS(nes::SeparableState(mu, bad_sbar), nes::collapse_error);
  CHECK_THROWS_AS(nes::CauchyState(mu, MatrixXd::Zero(2, 2)),
                  nes::collapse_error);
}

TEST_CASE("gaussian_natural_log_derivs closed forms") {
  const nes::NaturalGradientPair g0 =
      nes::gaussian_natural_log_derivs(VectorXd::Zero(2));
  CHECK(g0.g_delta.norm() == 0.0);
  CHECK((g0.g_M + 0.5 * MatrixXd::Identity(2, 2)).norm() == 0.0);

  VectorXd z(2);
  z << 1.0, 0.0;
  const nes::NaturalGradientPair g = nes::gaussian_natural_log_derivs(z);
  CHECK(g.g_M(0, 0) == doctest::Approx(0.0));
  CHECK(g.g_M(0, 1) == doctest::Approx(0.0));
  CHECK(g.g_M(1, 1) == doctest::Approx(-0.5));
}

TEST_CASE("gaussian_natural_log_derivs matches finite differences") {
  nes::Rng rng(41);
  for (int rep = 0; rep < 10; ++rep) {
    const VectorXd z = rng.gaussian_vector(3);
    const nes::NaturalGradientPair g = nes::gaussian_natural_log_derivs(z);
    check_against_finite_differences(
        [](const VectorXd& x, const VectorXd& d, const MatrixXd& m) {
          return logpi_gauss(x, d, m);
        },
        z, g);
  }
}

TEST_CASE("separable_log_derivs") {
  const auto [gm0, gs0] = nes::separable_log_derivs(VectorXd::Zero(3));
  CHECK(gm0.norm() == 0.0);
  CHECK((gs0.array() + 1.0).matrix().norm() == 0.0);

  VectorXd z(2);
  z << 1.0, 2.0;
  const auto [gm, gs] = nes::separable_log_derivs(z);
  CHECK(gm == z);
  CHECK(gs[0] == doctest::Approx(0.0));
  CHECK(gs[1] == doctest::Approx(3.0));

  // Finite differences of the per-coordinate log-density
  // log N(x | delta, e^(2 l)) at (delta, l) = (0, 0).
  nes::Rng rng(43);
  const double h = 1e-5;
  for (int rep = 0; rep < 10; ++rep) {
    const double x = rng.gaussian();
    auto logn = [x](double delta, double l) {
      const double s = std::exp(l);
      return -0.5 * std::log(2.0 * kPi) - l -
             0.5 * (x - delta) * (x - delta) / (s * s);
    };
    VectorXd z1(1);
    z1 << x;
    const auto [gmu, gsig] = nes::separable_log_derivs(z1);
    CHECK(std::abs(gmu[0] - (logn(h, 0) - logn(-h, 0)) / (2 * h)) < 1e-6);
    CHECK(std::abs(gsig[0] - (logn(0, h) - logn(0, -h)) / (2 * h)) < 1e-6);
  }
}

TEST_CASE("radial_log_derivs recovers the Gaussian closed form") {
  nes::Rng rng(47);
  const nes::GaussianRadial q(3);
  for (int rep = 0; rep < 10; ++rep) {
    const VectorXd z = rng.gaussian_vector(3);
    const nes::NaturalGradientPair a = nes::radial_log_derivs(q, z);
    const nes::NaturalGradientPair b = nes::gaussian_natural_log_derivs(z);
    CHECK((a.g_delta - b.g_delta).norm() < 1e-12);
    CHECK((a.g_M - b.g_M).norm() < 1e-12);
    CHECK_FALSE(a.g_tau.has_value());
  }
}

TEST_CASE("radial_log_derivs Cauchy at the origin") {
  const nes::CauchyRadial q(2);
  const nes::NaturalGradientPair g =
      nes::radial_log_derivs(q, VectorXd::Zero(2));
  CHECK((g.g_M + 0.5 * MatrixXd::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("radial tau component matches finite differences") {
  nes::Rng rng(53);
  const double h = 1e-5;
  for (int rep = 0; rep < 10; ++rep) {
    const VectorXd z = rng.gaussian_vector(2);
    const double r2 = z.squaredNorm();
    const ScaledGaussian q(2, 1.0);
    const nes::NaturalGradientPair g = nes::radial_log_derivs(q, z);
    REQUIRE(g.g_tau.has_value());
    const double fd = (std::log(ScaledGaussian(2, 1.0 + h).q(r2)) -
                       std::log(ScaledGaussian(2, 1.0 - h).q(r2))) /
                      (2 * h);
    CHECK(std::abs((*g.g_tau)[0] - fd) < 1e-6);
    // The delta and M parts also satisfy the local finite differences.
    check_against_finite_differences(
        [&q](const VectorXd& x, const VectorXd& d, const MatrixXd& m) {
          return logpi_radial(q, x, d, m);
        },
        z, g);
  }
}

TEST_CASE("radial_log_derivs rejects a degenerate density") {
  const ScaledGaussian q(2, 1e-9);
  VectorXd z(2);
  z << 300.0, 0.0;  // q underflows to zero here
  CHECK_THROWS_AS(nes::radial_log_derivs(q, z),
                  nes::degenerate_density_error);
}

TEST_CASE("cauchy_log_derivs closed forms and consistency") {
  const nes::NaturalGradientPair g0 =
      nes::cauchy_log_derivs(VectorXd::Zero(2));
  CHECK(g0.g_delta.norm() == 0.0);
  CHECK((g0.g_M + 0.5 * MatrixXd::Identity(2, 2)).norm() == 0.0);

  VectorXd one(1);
  one << 1.0;
  const nes::NaturalGradientPair g1 = nes::cauchy_log_derivs(one);
  CHECK(g1.g_delta[0] == doctest::Approx(1.0));
  CHECK(g1.g_M(0, 0) == doctest::Approx(0.0));

  nes::Rng rng(59);
  const nes::CauchyRadial q(3);
  for (int rep = 0; rep < 10; ++rep) {
    const VectorXd z = rng.gaussian_vector(3);
    const nes::NaturalGradientPair a = nes::cauchy_log_derivs(z);
    const nes::NaturalGradientPair b = nes::radial_log_derivs(q, z);
    CHECK((a.g_delta - b.g_delta).norm() < 1e-10);
    CHECK((a.g_M - b.g_M).norm() < 1e-10);
    check_against_finite_differences(
        [&q](const VectorXd& x, const VectorXd& d, const MatrixXd& m) {
          return logpi_radial(q, x, d, m);
        },
        z, a);
  }
}

TEST_CASE("sample_cauchy: scalar marginal has |z| median 1") {
  nes::Rng rng(61);
  VectorXd mu(1);
  mu << 0.0;
  const nes::CauchyState state(mu, MatrixXd::Identity(1, 1));
  const int n = 100000;
  std::vector<double> absz(n);
  for (int k = 0; k < n; ++k) {
    absz[k] = std::abs(nes::sample_cauchy(state, rng).first[0]);
  }
  std::nth_element(absz.begin(), absz.begin() + n / 2, absz.end());
  CHECK(absz[n / 2] == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("sample_cauchy maps z through the state") {
  VectorXd mu(2);
  mu << 3.0, -1.0;
  MatrixXd a(2, 2);
  a << 2.0, 0.5, 0.0, 1.0;
  const nes::CauchyState state(mu, a);
  CHECK((state.to_search(VectorXd::Zero(2)) - mu).norm() == 0.0);
}

TEST_CASE("sample_cauchy radius distribution matches the density, KS 1%") {
  nes::Rng rng(67);
  const int d = 3;
  const nes::CauchyState state(VectorXd::Zero(d), MatrixXd::Identity(d, d));
  const nes::CauchyRadial q(d);
  const int n = 100000;
  std::vector<double> r2(n);
  for (int k = 0; k < n; ++k) {
    r2[k] = nes::sample_cauchy(state, rng).first.squaredNorm();
  }
  std::sort(r2.begin(), r2.end());
  // CDF oracle: integrate the radius density numerically in r.
  auto dens = [&](double r) { return nes::radius_density(q, r * r, d); };
  double ks = 0.0;
  double cdf = 0.0;
  double prev_r = 0.0;
  for (int k = 0; k < n; ++k) {
    const double r = std::sqrt(r2[k]);
    cdf += simpson(dens, prev_r, r, 8);
    prev_r = r;
    const double emp_lo = static_cast<double>(k) / n;
    const double emp_hi = static_cast<double>(k + 1) / n;
    ks = std::max({ks, std::abs(cdf - emp_lo), std::abs(cdf - emp_hi)});
  }
  CHECK(ks < 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("radius_density values and normalization") {
  // d = 1 Gaussian: the formula equals 2 sqrt(u) times the chi^2_1 density
  // of the squared radius (the extra factor is the dr/d(r^2) Jacobian).
  const nes::GaussianRadial q1(1);
  for (double u : {0.25, 1.0, 2.0, 5.0}) {
    CHECK(nes::radius_density(q1, u, 1) ==
          doctest::Approx(2.0 * std::sqrt(u) * chi2_1_pdf(u)).epsilon(1e-12));
  }
  CHECK(nes::radius_density(q1, 1.0, 1) ==
        doctest::Approx(2.0 * 0.2419707245191434).epsilon(1e-10));

  // The (r^2)^((d-1)/2) factor vanishes at zero for d >= 2.
  const nes::CauchyRadial q2(2);
  CHECK(nes::radius_density(q2, 0.0, 2) == 0.0);
  const nes::GaussianRadial g3(3);
  CHECK(nes::radius_density(g3, 0.0, 3) == 0.0);

  // Integrating over the radius r in [0, 1e6] gives 1 within 1e-3.
  auto integrand = [&](double theta) {
    const double r = std::tan(theta);
    const double sec2 = 1.0 + r * r;
    return nes::radius_density(q2, r * r, 2) * sec2;
  };
  const double total = simpson(integrand, 0.0, std::atan(1e6), 20000);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("woodbury_natural_gradient block solve") {
  // No tau block: identity.
  VectorXd g(3);
  g << 1.0, 2.0, 3.0;
  const VectorXd out =
      nes::woodbury_natural_gradient(MatrixXd(3, 0), MatrixXd(0, 0), g);
  CHECK(out == g);

  // Block-diagonal case by hand: v = 0, c = 2, g_tau = 4 -> tau part 2.
  VectorXd g2(3);
  g2 << 1.0, 2.0, 4.0;
  MatrixXd c(1, 1);
  c << 2.0;
  const VectorXd out2 =
      nes::woodbury_natural_gradient(MatrixXd::Zero(2, 1), c, g2);
  CHECK(out2[0] == doctest::Approx(1.0));
  CHECK(out2[1] == doctest::Approx(2.0));
  CHECK(out2[2] == doctest::Approx(2.0));

  // Dense linear-solve oracle on random blocks.
  nes::Rng rng(71);
  for (int rep = 0; rep < 20; ++rep) {
    const int head = 5, tau = 1;
    MatrixXd v(head, tau);
    for (int i = 0; i < head; ++i) v(i, 0) = 0.3 * rng.gaussian();
    MatrixXd cc(tau, tau);
    cc(0, 0) = 2.0 + std::abs(rng.gaussian());
    VectorXd gg(head + tau);
    for (int i = 0; i < head + tau; ++i) gg[i] = rng.gaussian();

    MatrixXd fisher = MatrixXd::Identity(head + tau, head + tau);
    fisher.block(0, head, head, tau) = v;
    fisher.block(head, 0, tau, head) = v.transpose();
    fisher.block(head, head, tau, tau) = cc;
    const VectorXd dense = fisher.fullPivLu().solve(gg);
    const VectorXd fast = nes::woodbury_natural_gradient(v, cc, gg);
    CHECK((fast - dense).norm() < 1e-8 * std::max(1.0, dense.norm()));
  }
}

TEST_CASE("woodbury_natural_gradient reports a singular Schur block") {
  MatrixXd v(2, 1);
  v << 1.0, 0.0;
  MatrixXd c(1, 1);
  c << 1.0;  // c - v^T v = 0
  VectorXd g(3);
  g << 1.0, 1.0, 1.0;
  CHECK_THROWS_AS(nes::woodbury_natural_gradient(v, c, g),
                  nes::singular_fisher_error);
}

TEST_CASE("Monte Carlo Fisher: E[g g^T] is the identity in the orthonormal "
          "basis (reduced-scale check)") {
  nes::Rng rng(73);
  const int d = 2;
  const int m = d + d * (d + 1) / 2;
  MatrixXd acc = MatrixXd::Zero(m, m);
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const VectorXd z = rng.gaussian_vector(d);
    const nes::NaturalGradientPair g = nes::gaussian_natural_log_derivs(z);
    VectorXd coords(m);
    coords.head(d) = g.g_delta;
    int idx = d;
    for (int i = 0; i < d; ++i) coords[idx++] = std::sqrt(2.0) * g.g_M(i, i);
    for (int i = 0; i < d; ++i) {
      for (int j = i + 1; j < d; ++j) coords[idx++] = 2.0 * g.g_M(i, j);
    }
    acc += coords * coords.transpose();
  }
  acc /= n;
  CHECK(((acc - MatrixXd::Identity(m, m)).array().abs().maxCoeff()) < 0.1);
}

TEST_CASE("radial log-density is exactly symmetric under permutations and "
          "sign flips") {
  nes::Rng rng(79);
  const nes::CauchyRadial q(5);
  for (int rep = 0; rep < 50; ++rep) {
    VectorXd z = rng.gaussian_vector(5);
    const double base = nes::radial_log_density(q, z);

    // Random permutation + sign flips via Fisher-Yates on indices.
    std::vector<int> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 4; i > 0; --i) {
      std::swap(perm[i], perm[rng.next_u64() % (i + 1)]);
    }
    VectorXd w(5);
    for (int i = 0; i < 5; ++i) {
      w[i] = (rng.next_u64() & 1 ? -1.0 : 1.0) * z[perm[i]];
    }
    CHECK(nes::radial_log_density(q, w) == base);
  }
}
