#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "nes/batch.hpp"
#include "nes/distributions.hpp"
#include "nes/rng.hpp"

namespace nes {

/// Step 2 of importance mixing exceeded the draw cap.
struct mixing_stall_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sample reuse across consecutive search distributions. Step 1 keeps each
/// old sample with probability min{1, (1-alpha) pi(x|new)/pi(x|old)}; step 2
/// draws fresh samples from the new state, accepting with probability
/// max{alpha, 1 - pi(x|old)/pi(x|new)}, until the batch has `lambda` members.
/// Only fresh samples invoke the evaluator; retained samples keep their
/// original fitnesses and get natural coordinates recomputed under the new
/// state. The combined batch is distributed as pi(.|new).
///
/// Density ratios are computed in log space. Throws mixing_stall_error after
/// 10^6 step-2 draws (callers fall back to full resampling).
EvaluatedBatch importance_mixing(
    const EvaluatedBatch& old_batch, const FullGaussianState& old_state,
    const FullGaussianState& new_state, double alpha, Rng& rng,
    const std::function<double(const Eigen::VectorXd&)>& evaluator,
    int lambda);

/// Values with positive weights, interpreted as fractional occurrence counts.
struct WeightedSampleSet {
  std::vector<double> values;
  std::vector<double> weights;
};

enum class MwDecision { FirstLarger, SecondLarger, Inconclusive };

struct MwResult {
  double u = 0.0;       ///< weighted U statistic
  double mean = 0.0;    ///< m m' / 2
  double stddev = 0.0;  ///< sqrt(m m' (m + m' + 1) / 12)
  MwDecision decision = MwDecision::Inconclusive;
};

/// Weighted Mann-Whitney test:
///   U = sum_{s_i > s'_j} w_i w'_j + (1/2) sum_{s_i = s'_j} w_i w'_j,
/// with m = sum w_i, m' = sum w'_j. First set is judged larger when
/// Phi((U - mean)/stddev) > 1 - rho, second larger when it is < rho.
/// With unit weights this reduces exactly to the classical test; with
/// integer weights it equals the classical test on weight-expanded multisets.
MwResult weighted_mann_whitney(const WeightedSampleSet& first,
                               const WeightedSampleSet& second, double rho);

/// Online learning-rate control. The freshly evaluated batch (drawn from
/// `reference`) is compared, at unit weights, against virtual samples from
/// `hypothetical` via importance weights
/// w'_i = pi(x_i|hypothetical) / pi(x_i|reference) and the weighted
/// Mann-Whitney test on fitness ranks at confidence rho = 1/2 - 1/(3(d+1)).
/// The engine passes the 1.5-eta variant of the update that produced this
/// generation, so the bolder rate is validated out-of-sample: a significant
/// improvement returns min(1, 1.1 eta); otherwise 0.9 eta + 0.1 eta_init.
double adaptation_sampling_update(double eta, double eta_init,
                                  const EvaluatedBatch& batch,
                                  const FullGaussianState& reference,
                                  const FullGaussianState& hypothetical,
                                  int dim);

}  // namespace nes
