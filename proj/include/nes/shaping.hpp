#pragma once

#include <utility>
#include <vector>

namespace nes {

/// Rank-based utility values u_1 >= ... >= u_lambda with sum zero.
class UtilityVector {
 public:
  explicit UtilityVector(std::vector<double> u);

  int size() const { return static_cast<int>(u_.size()); }
  double operator[](int rank_index) const { return u_[rank_index]; }
  const std::vector<double>& values() const { return u_; }

 private:
  std::vector<double> u_;
};

/// Default utilities as a function of the population size:
///   u_k = max(0, ln(lambda/2 + 1) - ln(k)) / sum_j max(0, ...) - 1/lambda.
/// Natural logarithm; rank k = 1 is the best sample. Entries at or below the
/// median rank come out as exactly -1/lambda.
UtilityVector default_utilities(int lambda);

/// Assigns utilities to samples by fitness rank. The best sample receives
/// u_1 and the worst u_lambda; the result is indexed like `fitness`.
/// Tied fitnesses share the mean of the utility slots their ranks span,
/// which keeps the zero sum and removes any dependence on input order.
/// Throws std::invalid_argument on NaN fitness or length mismatch.
std::vector<double> shape(const std::vector<double>& fitness,
                          const UtilityVector& utilities, bool maximize);

/// Success-based utilities (u_parent, u_offspring) for (1+1) selection:
/// (-4, 1) when the offspring improved, (4/5, 0) otherwise.
std::pair<double, double> success_utilities(bool improved);

}  // namespace nes
