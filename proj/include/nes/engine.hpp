#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nes/batch.hpp"
#include "nes/distributions.hpp"
#include "nes/rng.hpp"
#include "nes/shaping.hpp"

namespace nes {

struct singular_covariance_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Algorithm {
  PlainGradient,     // search gradient on (mu, Sigma), raw fitness
  CanonicalNes,      // estimated-Fisher natural gradient, raw fitness
  Xnes,              // exponential NES, full covariance
  Snes,              // separable NES
  XnesHillclimber,   // (1+1) full-covariance Gaussian
  SnesHillclimber,   // (1+1) separable Gaussian
  RadialHillclimber, // (1+1) isotropic Gaussian with 1/5-ish rule
  CauchyHillclimber, // (1+1) multivariate Cauchy
};

Algorithm algorithm_from_string(const std::string& name);
std::string to_string(Algorithm a);
bool is_hillclimber(Algorithm a);

/// Table-style default hyperparameters as functions of the dimension.
int default_population(int d);
double default_eta_mu();
/// Shared covariance rate for the full parameterization:
/// (9 + 3 ln d) / (5 d sqrt(d)).
double default_eta_sigma_full(int d);
/// Separable rate (3 + ln d) / (5 sqrt(d)); equals the full rate times d/3.
double default_eta_sbar(int d);

enum class NanPolicy { Abort, ResampleOnce, TreatAsWorst };

enum class Termination { TargetHit, Budget, Collapse, Divergence, Error };
std::string to_string(Termination t);

struct RunConfig {
  Algorithm algorithm = Algorithm::Xnes;
  int lambda = 0;        // 0 = default population (1 for hill-climbers)
  double eta_mu = 0.0;   // 0 = default
  double eta_sigma = 0.0;
  double eta_B = 0.0;    // 0 = follow eta_sigma
  double eta_sbar = 0.0;
  bool importance_mixing = false;
  double alpha = 0.1;
  bool adaptation_sampling = false;
  NanPolicy nan_policy = NanPolicy::TreatAsWorst;
  std::optional<double> target;  // on the internal (maximized) fitness scale
  long budget = 100000;
  Eigen::VectorXd mu0;
  double sigma0 = 1.0;
  Eigen::MatrixXd B0;      // empty = identity
  Eigen::VectorXd sbar0;   // empty = sigma0 * ones
  bool record_trace = true;
};

struct GenerationRecord {
  long generation = 0;
  long evaluations = 0;    // cumulative, monotone across records
  double best_fitness = 0; // best so far, internal scale
  Eigen::VectorXd mu;
  double sigma = 0.0;      // step size (full Gaussian / radial / |det A|^(1/d))
  Eigen::VectorXd sbar;    // separable algorithms only
  Eigen::MatrixXd B;       // full-covariance algorithms only
  int fresh = 0;           // evaluations spent this generation
  double eta_sigma = 0.0;  // current covariance rate (adaptation sampling)
};

struct RunResult {
  Eigen::VectorXd best_point;
  double best_fitness = -std::numeric_limits<double>::infinity();
  long evaluations = 0;
  Termination termination = Termination::Budget;
  std::vector<GenerationRecord> trace;
  long nan_evaluations = 0;
  std::string error_message;
};

/// Fitness to maximize; the harness negates minimization objectives.
using FitnessFn = std::function<double(const Eigen::VectorXd&)>;

// ---- single-step operations ------------------------------------------------

/// Plain search gradient on the (mu, Sigma) parameterization, Monte Carlo
/// averaged over the batch and applied through the A-factor chain rule
/// (Sigma = A^T A with A the SPD square root), which keeps Sigma positive
/// semi-definite. `xs` holds one sample per row; `fitness` is raw.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> plain_gradient_step(
    const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma_mat,
    const Eigen::MatrixXd& xs, const Eigen::VectorXd& fitness, double eta);

/// Generic estimated-Fisher natural gradient step: F is estimated as the
/// mean outer product of the per-sample log-derivative rows, the solve is
/// damped with eps = 1e-8 trace(F)/m escalating by 10x until it succeeds.
/// Throws singular_fisher_error when damping cannot rescue the solve.
Eigen::VectorXd canonical_nes_step(const Eigen::VectorXd& theta,
                                   const Eigen::MatrixXd& log_derivs,
                                   const Eigen::VectorXd& fitness, double eta);

/// One xNES generation from a shaped batch:
///   grad_delta = sum u_k z_k,  grad_M = sum u_k (z_k z_k^T - I),
///   grad_sigma = tr(grad_M)/d, grad_B = grad_M - grad_sigma I,
///   mu    <- mu + eta_mu sigma B^T grad_delta
///   sigma <- sigma exp(eta_sigma/2 grad_sigma)
///   B     <- exp(eta_B/2 grad_B) B   (then renormalized to |det B| = 1)
FullGaussianState xnes_step(const FullGaussianState& state,
                            const EvaluatedBatch& batch, double eta_mu,
                            double eta_sigma, double eta_B);

/// One SNES generation, O(d) per sample:
///   mu   <- mu + eta_mu sbar . grad_mu,
///   sbar <- sbar . exp(eta_sbar/2 grad_sbar),
/// with grad_mu = sum u_k z_k and grad_sbar = sum u_k (z_k^2 - 1).
SeparableState snes_step(const SeparableState& state,
                         const EvaluatedBatch& batch, double eta_mu,
                         double eta_sbar);

/// (1+1) full-Gaussian hill-climber update for one offspring draw z with
/// fitness f. Success-based utilities; the shape gradient follows the
/// algorithm box literally: grad_M = -u1/2 I + u2/4 (z z^T - I).
/// Returns the new state and best fitness.
std::pair<FullGaussianState, double> xnes_hillclimber_step(
    const FullGaussianState& state, const Eigen::VectorXd& z, double fitness,
    double f_max, double eta);

/// (1+1) separable hill-climber: the diagonal restriction of the full
/// update, sbar_i <- sbar_i exp(eta/2 (-u1/2 + u2/4 (z_i^2 - 1))).
std::pair<SeparableState, double> snes_hillclimber_step(
    const SeparableState& state, const Eigen::VectorXd& z, double fitness,
    double f_best, double eta);

/// (1+1) isotropic Gaussian hill-climber: on success mu is replaced and
/// sigma grows by exp(5 eta_sigma); otherwise sigma shrinks by
/// exp(-eta_sigma). Implements roughly the 1/5 success rule.
struct RadialStepResult {
  Eigen::VectorXd mu;
  double sigma;
  double f_best;
};
RadialStepResult radial_hillclimber_step(const Eigen::VectorXd& mu,
                                         double sigma,
                                         const Eigen::VectorXd& z,
                                         double fitness, double f_best,
                                         double eta_sigma);

/// (1+1) multivariate Cauchy hill-climber: success-based utilities over
/// parent (z = 0) and offspring,
///   grad_M = 1/2 [ u1 (-I/2) + u2 (1/2)((d+1)/(||z||^2+1) z z^T - I) ],
///   A <- exp(eta_A/2 grad_M) A,
/// mean replaced on success.
std::pair<CauchyState, double> cauchy_hillclimber_step(
    const CauchyState& state, const Eigen::VectorXd& z,
    const Eigen::VectorXd& x, double fitness, double f_best, double eta_A);

/// Runs the configured algorithm until the target is reached, the budget is
/// exhausted, or the distribution collapses/diverges. Deterministic per
/// (config, seed): identical inputs give bit-identical results.
RunResult run(const FitnessFn& objective, const RunConfig& config,
              std::uint64_t seed);

}  // namespace nes
