#include "nes/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <tuple>

#include <Eigen/Dense>

#include "nes/adaptation.hpp"
#include "nes/symmat.hpp"

namespace nes {

namespace {

constexpr double kCollapseRatio = 1e-20;
constexpr double kDivergenceRatio = 1e20;
const double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::MatrixXd sym_exp_raw(const Eigen::MatrixXd& m) {
  return sym_exp(SymMatrix(m)).entries();
}

}  // namespace

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "plain") return Algorithm::PlainGradient;
  if (name == "canonical") return Algorithm::CanonicalNes;
  if (name == "xnes") return Algorithm::Xnes;
  if (name == "snes") return Algorithm::Snes;
  if (name == "1p1-xnes") return Algorithm::XnesHillclimber;
  if (name == "1p1-snes") return Algorithm::SnesHillclimber;
  if (name == "1p1-gauss") return Algorithm::RadialHillclimber;
  if (name == "1p1-cauchy") return Algorithm::CauchyHillclimber;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::PlainGradient: return "plain";
    case Algorithm::CanonicalNes: return "canonical";
    case Algorithm::Xnes: return "xnes";
    case Algorithm::Snes: return "snes";
    case Algorithm::XnesHillclimber: return "1p1-xnes";
    case Algorithm::SnesHillclimber: return "1p1-snes";
    case Algorithm::RadialHillclimber: return "1p1-gauss";
    case Algorithm::CauchyHillclimber: return "1p1-cauchy";
  }
  return "?";
}

bool is_hillclimber(Algorithm a) {
  return a == Algorithm::XnesHillclimber || a == Algorithm::SnesHillclimber ||
         a == Algorithm::RadialHillclimber ||
         a == Algorithm::CauchyHillclimber;
}

int default_population(int d) {
  if (d < 1) throw std::invalid_argument("default_population: d < 1");
  return 4 + static_cast<int>(std::floor(3.0 * std::log(d)));
}

double default_eta_mu() { return 1.0; }

double default_eta_sigma_full(int d) {
  return (9.0 + 3.0 * std::log(d)) / (5.0 * d * std::sqrt(d));
}

double default_eta_sbar(int d) {
  return (3.0 + std::log(d)) / (5.0 * std::sqrt(d));
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::TargetHit: return "target-hit";
    case Termination::Budget: return "budget";
    case Termination::Collapse: return "collapse";
    case Termination::Divergence: return "divergence";
    case Termination::Error: return "error";
  }
  return "?";
}

// ---- step operations --------------------------------------------------------

std::pair<Eigen::VectorXd, Eigen::MatrixXd> plain_gradient_step(
    const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma_mat,
    const Eigen::MatrixXd& xs, const Eigen::VectorXd& fitness, double eta) {
  const int d = static_cast<int>(mu.size());
  const int lambda = static_cast<int>(xs.rows());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma_mat);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      !(ldlt.vectorD().minCoeff() > 0.0)) {
    throw singular_covariance_error("plain_gradient_step: singular covariance");
  }
  const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(d, d));

  Eigen::VectorXd grad_mu = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd grad_sigma = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < lambda; ++k) {
    const Eigen::VectorXd diff = xs.row(k).transpose() - mu;
    const Eigen::VectorXd w = inv * diff;
    grad_mu += fitness[k] * w;
    grad_sigma += fitness[k] * 0.5 * (w * w.transpose() - inv);
  }
  grad_mu /= lambda;
  grad_sigma /= lambda;

  // The additive update can leave the SPD cone; the caller observes that as
  // a singular covariance on the next generation.
  const Eigen::VectorXd mu_new = mu + eta * grad_mu;
  Eigen::MatrixXd sigma_new = sigma_mat + eta * grad_sigma;
  sigma_new = 0.5 * (sigma_new + sigma_new.transpose());
  return {mu_new, sigma_new};
}

Eigen::VectorXd canonical_nes_step(const Eigen::VectorXd& theta,
                                   const Eigen::MatrixXd& log_derivs,
                                   const Eigen::VectorXd& fitness,
                                   double eta) {
  const int lambda = static_cast<int>(log_derivs.rows());
  const int m = static_cast<int>(log_derivs.cols());
  const Eigen::VectorXd grad =
      log_derivs.transpose() * fitness / static_cast<double>(lambda);
  const Eigen::MatrixXd fisher =
      log_derivs.transpose() * log_derivs / static_cast<double>(lambda);

  double eps = 1e-8 * fisher.trace() / m;
  if (!(eps > 0.0)) eps = 1e-16;
  for (int attempt = 0; attempt < 60; ++attempt) {
    const Eigen::MatrixXd damped =
        fisher + eps * Eigen::MatrixXd::Identity(m, m);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      const Eigen::VectorXd step = ldlt.solve(grad);
      if (step.allFinite()) return theta + eta * step;
    }
    eps *= 10.0;
  }
  throw singular_fisher_error(
      "canonical_nes_step: Fisher estimate not invertible after damping");
}

FullGaussianState xnes_step(const FullGaussianState& state,
                            const EvaluatedBatch& batch, double eta_mu,
                            double eta_sigma, double eta_B) {
  const int d = state.dim();
  const int lambda = batch.size();
  Eigen::VectorXd grad_delta = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd grad_m = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < lambda; ++k) {
    const Eigen::VectorXd z = batch.z.row(k);
    const double u = batch.utility[k];
    grad_delta += u * z;
    grad_m += u * (z * z.transpose() - Eigen::MatrixXd::Identity(d, d));
  }
  const double grad_sigma = grad_m.trace() / d;
  const Eigen::MatrixXd grad_b =
      grad_m - grad_sigma * Eigen::MatrixXd::Identity(d, d);

  const Eigen::VectorXd mu_new =
      state.mu + eta_mu * state.sigma * (state.B.transpose() * grad_delta);
  const double sigma_new = state.sigma * std::exp(0.5 * eta_sigma * grad_sigma);
  const Eigen::MatrixXd b_new = sym_exp_raw(0.5 * eta_B * grad_b) * state.B;
  return FullGaussianState(mu_new, sigma_new, b_new);
}

SeparableState snes_step(const SeparableState& state,
                         const EvaluatedBatch& batch, double eta_mu,
                         double eta_sbar) {
  const int d = state.dim();
  const int lambda = batch.size();
  Eigen::VectorXd grad_mu = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd grad_sbar = Eigen::VectorXd::Zero(d);
  for (int k = 0; k < lambda; ++k) {
    const Eigen::VectorXd z = batch.z.row(k);
    grad_mu += batch.utility[k] * z;
    grad_sbar += batch.utility[k] * (z.array().square() - 1.0).matrix();
  }
  const Eigen::VectorXd mu_new =
      state.mu + eta_mu * state.sbar.cwiseProduct(grad_mu);
  const Eigen::VectorXd sbar_new =
      state.sbar.cwiseProduct((0.5 * eta_sbar * grad_sbar).array().exp().matrix());
  return SeparableState(mu_new, sbar_new);
}

std::pair<FullGaussianState, double> xnes_hillclimber_step(
    const FullGaussianState& state, const Eigen::VectorXd& z, double fitness,
    double f_max, double eta) {
  const int d = state.dim();
  const bool improved = fitness > f_max;
  const auto [u1, u2] = success_utilities(improved);
  const Eigen::MatrixXd grad_m =
      -0.5 * u1 * Eigen::MatrixXd::Identity(d, d) +
      0.25 * u2 * (z * z.transpose() - Eigen::MatrixXd::Identity(d, d));
  const double grad_sigma = grad_m.trace() / d;
  const Eigen::MatrixXd grad_b =
      grad_m - grad_sigma * Eigen::MatrixXd::Identity(d, d);

  Eigen::VectorXd mu_new = state.mu;
  double best = f_max;
  if (improved) {
    mu_new = state.to_search(z);
    best = fitness;
  }
  const double sigma_new = state.sigma * std::exp(0.5 * eta * grad_sigma);
  const Eigen::MatrixXd b_new = sym_exp_raw(0.5 * eta * grad_b) * state.B;
  return {FullGaussianState(mu_new, sigma_new, b_new), best};
}

std::pair<SeparableState, double> snes_hillclimber_step(
    const SeparableState& state, const Eigen::VectorXd& z, double fitness,
    double f_best, double eta) {
  const bool improved = fitness > f_best;
  const auto [u1, u2] = success_utilities(improved);
  const Eigen::ArrayXd grad =
      -0.5 * u1 + 0.25 * u2 * (z.array().square() - 1.0);
  Eigen::VectorXd mu_new = state.mu;
  double best = f_best;
  if (improved) {
    mu_new = state.to_search(z);
    best = fitness;
  }
  const Eigen::VectorXd sbar_new =
      state.sbar.cwiseProduct((0.5 * eta * grad).exp().matrix());
  return {SeparableState(mu_new, sbar_new), best};
}

RadialStepResult radial_hillclimber_step(const Eigen::VectorXd& mu,
                                         double sigma,
                                         const Eigen::VectorXd& z,
                                         double fitness, double f_best,
                                         double eta_sigma) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("radial_hillclimber_step: sigma must be > 0");
  }
  RadialStepResult out{mu, sigma, f_best};
  if (fitness > f_best) {
    out.mu = mu + sigma * z;
    out.sigma = sigma * std::exp(5.0 * eta_sigma);
    out.f_best = fitness;
  } else {
    out.sigma = sigma * std::exp(-eta_sigma);
  }
  return out;
}

std::pair<CauchyState, double> cauchy_hillclimber_step(
    const CauchyState& state, const Eigen::VectorXd& z,
    const Eigen::VectorXd& x, double fitness, double f_best, double eta_A) {
  const int d = state.dim();
  const bool improved = fitness > f_best;
  const auto [u1, u2] = success_utilities(improved);
  // Parent sits at z = 0, where the shape log-derivative is -I/2.
  const Eigen::MatrixXd parent_term =
      -0.5 * Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd offspring_term = cauchy_log_derivs(z).g_M;
  const Eigen::MatrixXd grad_m =
      0.5 * (u1 * parent_term + u2 * offspring_term);

  Eigen::VectorXd mu_new = state.mu;
  double best = f_best;
  if (improved) {
    mu_new = x;
    best = fitness;
  }
  const Eigen::MatrixXd a_new = sym_exp_raw(0.5 * eta_A * grad_m) * state.A;
  return {CauchyState(mu_new, a_new), best};
}

// ---- run loop ---------------------------------------------------------------

namespace {

struct stop_signal {
  Termination reason;
};

class RunDriver {
 public:
  RunDriver(const FitnessFn& objective, const RunConfig& config,
            std::uint64_t seed)
      : objective_(objective), cfg_(config), rng_(seed) {
    if (cfg_.mu0.size() == 0) {
      throw std::invalid_argument("run: config.mu0 must be set");
    }
    d_ = static_cast<int>(cfg_.mu0.size());
    lambda_ = cfg_.lambda > 0
                  ? cfg_.lambda
                  : (is_hillclimber(cfg_.algorithm) ? 1 : default_population(d_));
    eta_mu_ = cfg_.eta_mu > 0 ? cfg_.eta_mu : default_eta_mu();
    eta_sigma_ = cfg_.eta_sigma > 0 ? cfg_.eta_sigma
                                    : default_eta_sigma_full(d_);
    eta_b_ = cfg_.eta_B > 0 ? cfg_.eta_B : eta_sigma_;
    eta_sbar_ = cfg_.eta_sbar > 0 ? cfg_.eta_sbar : default_eta_sbar(d_);
    eta_init_ = eta_sigma_;
    result_.best_point = cfg_.mu0;
    snapshot_mu_ = cfg_.mu0;
    snapshot_sigma_ = cfg_.sigma0;
  }

  Eigen::MatrixXd initial_b() const {
    if (cfg_.B0.size()) return cfg_.B0;
    return Eigen::MatrixXd::Identity(d_, d_);
  }

  Eigen::VectorXd initial_sbar() const {
    if (cfg_.sbar0.size()) return cfg_.sbar0;
    return Eigen::VectorXd::Constant(d_, cfg_.sigma0);
  }

  RunResult go() {
    try {
      dispatch();
    } catch (const stop_signal& s) {
      result_.termination = s.reason;
    } catch (const collapse_error&) {
      result_.termination = Termination::Collapse;
    } catch (const std::exception& e) {
      result_.termination = Termination::Error;
      result_.error_message = e.what();
    }
    result_.evaluations = evals_;
    if (result_.trace.empty() || result_.trace.back().generation != gen_ ||
        result_.trace.back().evaluations != evals_) {
      push_record();
    }
    return result_;
  }

 private:
  void dispatch() {
    switch (cfg_.algorithm) {
      case Algorithm::Xnes: run_xnes(); break;
      case Algorithm::Snes: run_snes(); break;
      case Algorithm::PlainGradient: run_plain(); break;
      case Algorithm::CanonicalNes: run_canonical(); break;
      case Algorithm::XnesHillclimber: run_xnes_hc(); break;
      case Algorithm::SnesHillclimber: run_snes_hc(); break;
      case Algorithm::RadialHillclimber: run_radial_hc(); break;
      case Algorithm::CauchyHillclimber: run_cauchy_hc(); break;
    }
  }

  double evaluate(const Eigen::VectorXd& x) {
    if (evals_ >= cfg_.budget) throw stop_signal{Termination::Budget};
    double f = objective_(x);
    ++evals_;
    if (std::isnan(f)) {
      ++result_.nan_evaluations;
      if (cfg_.nan_policy == NanPolicy::Abort) {
        throw std::runtime_error("objective returned NaN");
      }
      f = kNegInf;  // worst-in-batch under maximization
      if (result_.nan_evaluations == 1) {
        std::fprintf(stderr, "nesopt: warning: NaN fitness treated as worst\n");
      }
    }
    if (f > result_.best_fitness) {
      result_.best_fitness = f;
      result_.best_point = x;
    }
    if (cfg_.target && result_.best_fitness >= *cfg_.target) {
      throw stop_signal{Termination::TargetHit};
    }
    return f;
  }

  /// Evaluation with the resample-once policy applied at the draw level:
  /// on NaN the natural draw is redrawn once and re-evaluated.
  template <typename Redraw>
  double evaluate_with_policy(Eigen::VectorXd& z, Eigen::VectorXd& x,
                              const Redraw& redraw) {
    if (evals_ >= cfg_.budget) throw stop_signal{Termination::Budget};
    double f = objective_(x);
    ++evals_;
    if (std::isnan(f) && cfg_.nan_policy == NanPolicy::ResampleOnce) {
      ++result_.nan_evaluations;
      redraw(z, x);
      if (evals_ >= cfg_.budget) throw stop_signal{Termination::Budget};
      f = objective_(x);
      ++evals_;
    }
    if (std::isnan(f)) {
      ++result_.nan_evaluations;
      if (cfg_.nan_policy == NanPolicy::Abort) {
        throw std::runtime_error("objective returned NaN");
      }
      f = kNegInf;
      if (result_.nan_evaluations == 1) {
        std::fprintf(stderr, "nesopt: warning: NaN fitness treated as worst\n");
      }
    }
    if (f > result_.best_fitness) {
      result_.best_fitness = f;
      result_.best_point = x;
    }
    if (cfg_.target && result_.best_fitness >= *cfg_.target) {
      throw stop_signal{Termination::TargetHit};
    }
    return f;
  }

  void check_scale(double scale) {
    if (!(scale / scale0_ > kCollapseRatio)) {
      throw stop_signal{Termination::Collapse};
    }
    if (!(scale / scale0_ < kDivergenceRatio)) {
      throw stop_signal{Termination::Divergence};
    }
  }

  void push_record() {
    GenerationRecord rec;
    rec.generation = gen_;
    rec.evaluations = evals_;
    rec.best_fitness = result_.best_fitness;
    rec.mu = snapshot_mu_;
    rec.sigma = snapshot_sigma_;
    rec.sbar = snapshot_sbar_;
    rec.B = snapshot_b_;
    rec.fresh = fresh_this_gen_;
    rec.eta_sigma = eta_sigma_;
    result_.trace.push_back(std::move(rec));
  }

  void maybe_record() {
    if (cfg_.record_trace) push_record();
  }

  EvaluatedBatch fresh_full_batch(const FullGaussianState& state) {
    EvaluatedBatch batch;
    batch.z.resize(lambda_, d_);
    batch.x.resize(lambda_, d_);
    batch.fitness.resize(lambda_);
    for (int k = 0; k < lambda_; ++k) {
      Eigen::VectorXd z = rng_.gaussian_vector(d_);
      Eigen::VectorXd x = state.to_search(z);
      batch.fitness[k] = evaluate_with_policy(z, x, [&](Eigen::VectorXd& zz,
                                                        Eigen::VectorXd& xx) {
        zz = rng_.gaussian_vector(d_);
        xx = state.to_search(zz);
      });
      batch.z.row(k) = z;
      batch.x.row(k) = x;
    }
    batch.fresh = lambda_;
    return batch;
  }

  void run_xnes() {
    FullGaussianState state(cfg_.mu0, cfg_.sigma0, initial_b());
    scale0_ = state.sigma;
    std::optional<EvaluatedBatch> prev_batch;
    FullGaussianState prev_state = state;
    // The 1.5-eta variant of the previous update, judged against the fresh
    // batch it would have produced.
    std::optional<FullGaussianState> hypothetical;

    while (true) {
      if (evals_ >= cfg_.budget) throw stop_signal{Termination::Budget};
      EvaluatedBatch batch;
      if (cfg_.importance_mixing && prev_batch) {
        try {
          batch = importance_mixing(
              *prev_batch, prev_state, state, cfg_.alpha, rng_,
              [&](const Eigen::VectorXd& x) { return evaluate(x); }, lambda_);
        } catch (const mixing_stall_error&) {
          batch = fresh_full_batch(state);
        }
      } else {
        batch = fresh_full_batch(state);
      }
      fresh_this_gen_ = batch.fresh;
      const std::vector<double> shaped =
          shape(std::vector<double>(batch.fitness.data(),
                                    batch.fitness.data() + lambda_),
                utilities(), true);
      batch.utility =
          Eigen::Map<const Eigen::VectorXd>(shaped.data(), lambda_);

      if (cfg_.adaptation_sampling && hypothetical) {
        eta_sigma_ = adaptation_sampling_update(eta_sigma_, eta_init_, batch,
                                                state, *hypothetical, d_);
      }
      FullGaussianState next = xnes_step(state, batch, eta_mu_, eta_sigma_,
                                         eta_b_);
      if (cfg_.adaptation_sampling) {
        hypothetical =
            xnes_step(state, batch, eta_mu_, 1.5 * eta_sigma_, eta_b_);
      }
      prev_state = state;
      prev_batch = batch;
      state = std::move(next);

      ++gen_;
      snapshot_full(state);
      check_scale(state.sigma);
      maybe_record();
    }
  }

  void run_snes() {
    SeparableState state(cfg_.mu0, initial_sbar());
    scale0_ = geomean(state.sbar);

    while (true) {
      if (evals_ >= cfg_.budget) throw stop_signal{Termination::Budget};
      EvaluatedBatch batch;
      batch.z.resize(lambda_, d_);
      batch.x.resize(lambda_, d_);
      batch.fitness.resize(lambda_);
      for (int k = 0; k < lambda_; ++k) {
        Eigen::VectorXd z = rng_.gaussian_vector(d_);
        Eigen::VectorXd x = state.to_search(z);
        batch.fitness[k] = evaluate_with_policy(
            z, x, [&](Eigen::VectorXd& zz, Eigen::VectorXd& xx) {
              zz = rng_.gaussian_vector(d_);
              xx = state.to_search(zz);
            });
        batch.z.row(k) = z;
        batch.x.row(k) = x;
      }
      fresh_this_gen_ = lambda_;
      const std::vector<double> shaped =
          shape(std::vector<double>(batch.fitness.data(),
                                    batch.fitness.data() + lambda_),
                utilities(), true);
      batch.utility =
          Eigen::Map<const Eigen::VectorXd>(shaped.data(), lambda_);

      state = snes_step(state, batch, eta_mu_, eta_sbar_);
      ++gen_;
      snapshot_separable(state);
      check_scale(geomean(state.sbar));
      maybe_record();
    }
  }

  void run_plain() {
    Eigen::VectorXd mu = cfg_.mu0;
    Eigen::MatrixXd sigma_mat =
        cfg_.sigma0 * cfg_.sigma0 * Eigen::MatrixXd::Identity(d_, d_);
    scale0_ = cfg_.sigma0;

    while (true) {
      if (evals_ >= cfg_.budget) throw stop_signal{Termination::Budget};
      Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma_mat);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
          !(ldlt.vectorD().minCoeff() > 0.0)) {
        throw singular_covariance_error(
            "plain gradient: covariance left the SPD cone");
      }
      const Eigen::MatrixXd a = sym_pow(SpdMatrix(sigma_mat), 0.5).entries();
      Eigen::MatrixXd xs(lambda_, d_);
      Eigen::VectorXd fitness(lambda_);
      for (int k = 0; k < lambda_; ++k) {
        Eigen::VectorXd z = rng_.gaussian_vector(d_);
        Eigen::VectorXd x = mu + a.transpose() * z;
        fitness[k] = evaluate_with_policy(
            z, x, [&](Eigen::VectorXd& zz, Eigen::VectorXd& xx) {
              zz = rng_.gaussian_vector(d_);
              xx = mu + a.transpose() * zz;
            });
        xs.row(k) = x;
      }
      fresh_this_gen_ = lambda_;
      std::tie(mu, sigma_mat) =
          plain_gradient_step(mu, sigma_mat, xs, fitness, eta_sigma_);
      ++gen_;
      snapshot_mu_ = mu;
      const double scale =
          std::pow(std::abs(sigma_mat.determinant()), 0.5 / d_);
      snapshot_sigma_ = scale;
      snapshot_sbar_.resize(0);
      snapshot_b_.resize(0, 0);
      check_scale(scale);
      maybe_record();
    }
  }

  void run_canonical() {
    FullGaussianState state(cfg_.mu0, cfg_.sigma0, initial_b());
    scale0_ = state.sigma;
    const int m = d_ + d_ * (d_ + 1) / 2;

    while (true) {
      if (evals_ >= cfg_.budget) throw stop_signal{Termination::Budget};
      EvaluatedBatch batch = fresh_full_batch(state);
      fresh_this_gen_ = lambda_;
      Eigen::MatrixXd log_derivs(lambda_, m);
      for (int k = 0; k < lambda_; ++k) {
        const Eigen::VectorXd z = batch.z.row(k);
        const NaturalGradientPair g = gaussian_natural_log_derivs(z);
        log_derivs.row(k) = pack_gradient(g);
      }
      Eigen::VectorXd step;
      try {
        step = canonical_nes_step(Eigen::VectorXd::Zero(m), log_derivs,
                                  batch.fitness, eta_sigma_);
      } catch (const singular_fisher_error&) {
        std::fprintf(
            stderr,
            "nesopt: warning: singular Fisher estimate, plain gradient step\n");
        step = eta_sigma_ * log_derivs.transpose() * batch.fitness /
               static_cast<double>(lambda_);
      }
      state = apply_natural_step(state, step);
      ++gen_;
      snapshot_full(state);
      check_scale(state.sigma);
      maybe_record();
    }
  }

  /// Gradient coordinates in the orthonormal (delta, M) basis in which the
  /// Gaussian Fisher matrix is the identity: [z; sqrt(2) g_ii; 2 g_ij].
  Eigen::VectorXd pack_gradient(const NaturalGradientPair& g) const {
    Eigen::VectorXd out(d_ + d_ * (d_ + 1) / 2);
    out.head(d_) = g.g_delta;
    int idx = d_;
    for (int i = 0; i < d_; ++i) out[idx++] = std::sqrt(2.0) * g.g_M(i, i);
    for (int i = 0; i < d_; ++i) {
      for (int j = i + 1; j < d_; ++j) out[idx++] = 2.0 * g.g_M(i, j);
    }
    return out;
  }

  FullGaussianState apply_natural_step(const FullGaussianState& state,
                                       const Eigen::VectorXd& step) const {
    const Eigen::VectorXd delta = step.head(d_);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d_, d_);
    int idx = d_;
    for (int i = 0; i < d_; ++i) m(i, i) = std::sqrt(2.0) * step[idx++];
    for (int i = 0; i < d_; ++i) {
      for (int j = i + 1; j < d_; ++j) {
        m(i, j) = m(j, i) = step[idx++];
      }
    }
    const Eigen::VectorXd mu_new =
        state.mu + state.sigma * (state.B.transpose() * delta);
    const double grad_sigma = m.trace() / d_;
    const Eigen::MatrixXd m_b =
        m - grad_sigma * Eigen::MatrixXd::Identity(d_, d_);
    const double sigma_new = state.sigma * std::exp(0.5 * grad_sigma);
    const Eigen::MatrixXd b_new = sym_exp_raw(0.5 * m_b) * state.B;
    return FullGaussianState(mu_new, sigma_new, b_new);
  }

  void run_xnes_hc() {
    FullGaussianState state(cfg_.mu0, cfg_.sigma0, initial_b());
    scale0_ = state.sigma;
    double f_max = kNegInf;
    const double eta = cfg_.eta_sigma > 0 ? cfg_.eta_sigma
                                          : default_eta_sigma_full(d_);
    while (true) {
      Eigen::VectorXd z = rng_.gaussian_vector(d_);
      Eigen::VectorXd x = state.to_search(z);
      const double f = evaluate_with_policy(
          z, x, [&](Eigen::VectorXd& zz, Eigen::VectorXd& xx) {
            zz = rng_.gaussian_vector(d_);
            xx = state.to_search(zz);
          });
      fresh_this_gen_ = 1;
      std::tie(state, f_max) = xnes_hillclimber_step(state, z, f, f_max, eta);
      ++gen_;
      snapshot_full(state);
      check_scale(state.sigma);
      maybe_record();
    }
  }

  void run_snes_hc() {
    SeparableState state(cfg_.mu0, initial_sbar());
    scale0_ = geomean(state.sbar);
    double f_best = kNegInf;
    const double eta =
        cfg_.eta_sbar > 0 ? cfg_.eta_sbar : default_eta_sbar(d_);
    while (true) {
      Eigen::VectorXd z = rng_.gaussian_vector(d_);
      Eigen::VectorXd x = state.to_search(z);
      const double f = evaluate_with_policy(
          z, x, [&](Eigen::VectorXd& zz, Eigen::VectorXd& xx) {
            zz = rng_.gaussian_vector(d_);
            xx = state.to_search(zz);
          });
      fresh_this_gen_ = 1;
      std::tie(state, f_best) =
          snes_hillclimber_step(state, z, f, f_best, eta);
      ++gen_;
      snapshot_separable(state);
      check_scale(geomean(state.sbar));
      maybe_record();
    }
  }

  void run_radial_hc() {
    Eigen::VectorXd mu = cfg_.mu0;
    double sigma = cfg_.sigma0;
    scale0_ = sigma;
    const double eta = cfg_.eta_sigma > 0 ? cfg_.eta_sigma
                                          : default_eta_sigma_full(d_);
    double f_best = evaluate(mu);
    while (true) {
      Eigen::VectorXd z = rng_.gaussian_vector(d_);
      Eigen::VectorXd x = mu + sigma * z;
      const double f = evaluate_with_policy(
          z, x, [&](Eigen::VectorXd& zz, Eigen::VectorXd& xx) {
            zz = rng_.gaussian_vector(d_);
            xx = mu + sigma * zz;
          });
      fresh_this_gen_ = 1;
      const RadialStepResult r =
          radial_hillclimber_step(mu, sigma, z, f, f_best, eta);
      mu = r.mu;
      sigma = r.sigma;
      f_best = r.f_best;
      ++gen_;
      snapshot_mu_ = mu;
      snapshot_sigma_ = sigma;
      snapshot_sbar_.resize(0);
      snapshot_b_.resize(0, 0);
      check_scale(sigma);
      maybe_record();
    }
  }

  void run_cauchy_hc() {
    CauchyState state(cfg_.mu0, Eigen::MatrixXd(cfg_.sigma0 * initial_b()));
    scale0_ = std::pow(std::abs(state.A.determinant()), 1.0 / d_);
    double f_best = kNegInf;
    const double eta = cfg_.eta_sigma > 0 ? cfg_.eta_sigma
                                          : default_eta_sigma_full(d_);
    while (true) {
      if (evals_ >= cfg_.budget) throw stop_signal{Termination::Budget};
      auto [z, x] = sample_cauchy(state, rng_);
      const double f = evaluate_with_policy(
          z, x, [&](Eigen::VectorXd& zz, Eigen::VectorXd& xx) {
            std::tie(zz, xx) = sample_cauchy(state, rng_);
          });
      fresh_this_gen_ = 1;
      std::tie(state, f_best) =
          cauchy_hillclimber_step(state, z, x, f, f_best, eta);
      ++gen_;
      snapshot_mu_ = state.mu;
      snapshot_sigma_ = std::pow(std::abs(state.A.determinant()), 1.0 / d_);
      snapshot_sbar_.resize(0);
      snapshot_b_ = state.A;
      check_scale(snapshot_sigma_);
      maybe_record();
    }
  }

  const UtilityVector& utilities() {
    if (!utilities_) utilities_ = default_utilities(lambda_);
    return *utilities_;
  }

  static double geomean(const Eigen::VectorXd& v) {
    return std::exp(v.array().log().mean());
  }

  void snapshot_full(const FullGaussianState& s) {
    snapshot_mu_ = s.mu;
    snapshot_sigma_ = s.sigma;
    snapshot_b_ = s.B;
    snapshot_sbar_.resize(0);
  }

  void snapshot_separable(const SeparableState& s) {
    snapshot_mu_ = s.mu;
    snapshot_sigma_ = geomean(s.sbar);
    snapshot_sbar_ = s.sbar;
    snapshot_b_.resize(0, 0);
  }

  const FitnessFn& objective_;
  RunConfig cfg_;
  Rng rng_;
  int d_ = 0;
  int lambda_ = 0;
  double eta_mu_ = 0, eta_sigma_ = 0, eta_b_ = 0, eta_sbar_ = 0;
  double eta_init_ = 0;
  double scale0_ = 1.0;
  long evals_ = 0;
  long gen_ = 0;
  int fresh_this_gen_ = 0;
  std::optional<UtilityVector> utilities_;
  RunResult result_;
  Eigen::VectorXd snapshot_mu_;
  double snapshot_sigma_ = 0.0;
  Eigen::VectorXd snapshot_sbar_;
  Eigen::MatrixXd snapshot_b_;
};

}  // namespace

RunResult run(const FitnessFn& objective, const RunConfig& config,
              std::uint64_t seed) {
  RunDriver driver(objective, config, seed);
  return driver.go();
}

}  // namespace nes
