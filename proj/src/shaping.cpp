#include "nes/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nes {

UtilityVector::UtilityVector(std::vector<double> u) : u_(std::move(u)) {
  if (u_.empty()) throw std::invalid_argument("UtilityVector: empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < u_.size(); ++i) {
    if (!std::isfinite(u_[i])) {
      throw std::invalid_argument("UtilityVector: non-finite entry");
    }
    if (i > 0 && u_[i] > u_[i - 1]) {
      throw std::invalid_argument("UtilityVector: not non-increasing");
    }
    sum += u_[i];
  }
  if (std::abs(sum) > 1e-12) {
    throw std::invalid_argument("UtilityVector: does not sum to zero");
  }
}

UtilityVector default_utilities(int lambda) {
  if (lambda < 2) throw std::invalid_argument("default_utilities: lambda < 2");
  std::vector<double> raw(lambda);
  const double top = std::log(lambda / 2.0 + 1.0);
  double norm = 0.0;
  for (int k = 1; k <= lambda; ++k) {
    raw[k - 1] = std::max(0.0, top - std::log(static_cast<double>(k)));
    norm += raw[k - 1];
  }
  std::vector<double> u(lambda);
  for (int k = 0; k < lambda; ++k) {
    u[k] = raw[k] / norm - 1.0 / lambda;
  }
  return UtilityVector(std::move(u));
}

std::vector<double> shape(const std::vector<double>& fitness,
                          const UtilityVector& utilities, bool maximize) {
  const int lambda = static_cast<int>(fitness.size());
  if (lambda != utilities.size()) {
    throw std::invalid_argument("shape: fitness/utility length mismatch");
  }
  for (double f : fitness) {
    if (std::isnan(f)) throw std::invalid_argument("shape: NaN fitness");
  }

  std::vector<int> order(lambda);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return maximize ? fitness[a] > fitness[b] : fitness[a] < fitness[b];
  });

  std::vector<double> out(lambda, 0.0);
  int rank = 0;
  while (rank < lambda) {
    int end = rank + 1;
    while (end < lambda && fitness[order[end]] == fitness[order[rank]]) ++end;
    double mean = 0.0;
    for (int r = rank; r < end; ++r) mean += utilities[r];
    mean /= (end - rank);
    for (int r = rank; r < end; ++r) out[order[r]] = mean;
    rank = end;
  }
  return out;
}

std::pair<double, double> success_utilities(bool improved) {
  return improved ? std::pair<double, double>{-4.0, 1.0}
                  : std::pair<double, double>{0.8, 0.0};
}

}  // namespace nes
