#include "nes/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nes {

namespace {

constexpr long kStep2DrawCap = 1000000;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

EvaluatedBatch importance_mixing(
    const EvaluatedBatch& old_batch, const FullGaussianState& old_state,
    const FullGaussianState& new_state, double alpha, Rng& rng,
    const std::function<double(const Eigen::VectorXd&)>& evaluator,
    int lambda) {
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("importance_mixing: alpha must be in [0, 1]");
  }
  const int d = new_state.dim();
  std::vector<Eigen::VectorXd> xs;
  std::vector<double> fs;
  xs.reserve(lambda);
  fs.reserve(lambda);

  // Step 1: rejection-sample the previous batch toward the new density.
  for (int k = 0; k < old_batch.size() && static_cast<int>(xs.size()) < lambda;
       ++k) {
    const Eigen::VectorXd x = old_batch.x.row(k);
    const double log_ratio =
        new_state.log_density(x) - old_state.log_density(x);
    const double accept = std::min(1.0, (1.0 - alpha) * std::exp(log_ratio));
    if (rng.uniform() < accept) {
      xs.push_back(x);
      fs.push_back(old_batch.fitness[k]);
    }
  }
  const int kept = static_cast<int>(xs.size());

  // Step 2: reverse rejection sampling of fresh draws from the new state.
  std::vector<Eigen::VectorXd> fresh_x;
  long draws = 0;
  while (static_cast<int>(xs.size()) < lambda) {
    if (++draws > kStep2DrawCap) {
      throw mixing_stall_error("importance_mixing: step-2 acceptance stalled");
    }
    const Eigen::VectorXd z = rng.gaussian_vector(d);
    const Eigen::VectorXd x = new_state.to_search(z);
    const double log_ratio =
        old_state.log_density(x) - new_state.log_density(x);
    const double accept = std::max(alpha, 1.0 - std::exp(log_ratio));
    if (rng.uniform() < accept) {
      xs.push_back(x);
      fs.push_back(evaluator(x));
    }
  }

  EvaluatedBatch out;
  out.z.resize(lambda, d);
  out.x.resize(lambda, d);
  out.fitness.resize(lambda);
  for (int k = 0; k < lambda; ++k) {
    out.x.row(k) = xs[k];
    out.z.row(k) = new_state.to_natural(xs[k]);
    out.fitness[k] = fs[k];
  }
  out.fresh = lambda - kept;
  return out;
}

MwResult weighted_mann_whitney(const WeightedSampleSet& first,
                               const WeightedSampleSet& second, double rho) {
  if (first.values.empty() || second.values.empty() ||
      first.values.size() != first.weights.size() ||
      second.values.size() != second.weights.size()) {
    throw std::invalid_argument("weighted_mann_whitney: bad sample sets");
  }
  if (!(rho > 0.0 && rho < 0.5)) {
    throw std::invalid_argument("weighted_mann_whitney: rho must be in (0, 1/2)");
  }
  for (double w : first.weights) {
    if (!(w > 0.0)) throw std::invalid_argument("weighted_mann_whitney: weights must be positive");
  }
  for (double w : second.weights) {
    if (!(w > 0.0)) throw std::invalid_argument("weighted_mann_whitney: weights must be positive");
  }

  const double m = std::accumulate(first.weights.begin(), first.weights.end(), 0.0);
  const double m2 = std::accumulate(second.weights.begin(), second.weights.end(), 0.0);
  if (!(m > 0.0) || !(m2 > 0.0)) {
    throw std::invalid_argument("weighted_mann_whitney: zero total weight");
  }

  double u = 0.0;
  for (std::size_t i = 0; i < first.values.size(); ++i) {
    for (std::size_t j = 0; j < second.values.size(); ++j) {
      if (first.values[i] > second.values[j]) {
        u += first.weights[i] * second.weights[j];
      } else if (first.values[i] == second.values[j]) {
        u += 0.5 * first.weights[i] * second.weights[j];
      }
    }
  }

  MwResult result;
  result.u = u;
  result.mean = 0.5 * m * m2;
  result.stddev = std::sqrt(m * m2 * (m + m2 + 1.0) / 12.0);
  const double phi = normal_cdf((u - result.mean) / result.stddev);
  if (phi > 1.0 - rho) {
    result.decision = MwDecision::FirstLarger;
  } else if (phi < rho) {
    result.decision = MwDecision::SecondLarger;
  } else {
    result.decision = MwDecision::Inconclusive;
  }
  return result;
}

double adaptation_sampling_update(double eta, double eta_init,
                                  const EvaluatedBatch& batch,
                                  const FullGaussianState& reference,
                                  const FullGaussianState& hypothetical,
                                  int dim) {
  const int lambda = batch.size();
  // Quality psi = negative fitness rank (1 = best), identical values in both
  // sets; only the weights differ.
  std::vector<int> order(lambda);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return batch.fitness[a] > batch.fitness[b];
  });
  std::vector<double> psi(lambda);
  for (int r = 0; r < lambda; ++r) psi[order[r]] = -(r + 1.0);

  WeightedSampleSet current, virtual_set;
  current.values = psi;
  current.weights.assign(lambda, 1.0);
  virtual_set.values = psi;
  virtual_set.weights.resize(lambda);
  double total = 0.0;
  for (int k = 0; k < lambda; ++k) {
    const Eigen::VectorXd x = batch.x.row(k);
    const double w =
        std::exp(hypothetical.log_density(x) - reference.log_density(x));
    virtual_set.weights[k] = w;
    total += w;
  }

  const double rho = 0.5 - 1.0 / (3.0 * (dim + 1.0));
  bool improved = false;
  if (total > 1e-300 &&
      *std::min_element(virtual_set.weights.begin(),
                        virtual_set.weights.end()) > 0.0) {
    const MwResult mw = weighted_mann_whitney(current, virtual_set, rho);
    improved = mw.decision == MwDecision::SecondLarger;
  }
  if (improved) return std::min(1.0, 1.1 * eta);
  return 0.9 * eta + 0.1 * eta_init;
}

}  // namespace nes
