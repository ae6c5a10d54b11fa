#include "nes/restarts.hpp"

#include <cmath>
#include <stdexcept>

namespace nes {

RestartSchedule schedule_slices(double p, long total_budget, long min_slice) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::invalid_argument("schedule_slices: p must be in (0, 1]");
  }
  if (total_budget <= 0) {
    throw std::invalid_argument("schedule_slices: total_budget must be > 0");
  }
  if (min_slice < 1) min_slice = 1;

  RestartSchedule schedule{p, total_budget, min_slice, {}};
  long used = 0;
  double fraction = p;
  while (true) {
    long slice = std::lround(fraction * total_budget);
    slice = std::min(slice, total_budget - used);
    if (slice < min_slice) break;
    schedule.slices.push_back(slice);
    used += slice;
    fraction *= (1.0 - p);
    if (p == 1.0 || used >= total_budget) break;
  }
  return schedule;
}

RunResult interleaved_runner(const RunFactory& factory,
                             const RestartSchedule& schedule,
                             std::uint64_t master_seed) {
  if (schedule.slices.empty()) {
    throw std::invalid_argument(
        "interleaved_runner: schedule has no slices (budget below min_slice)");
  }
  RunResult best;
  bool have_best = false;
  bool best_success = false;
  long total_evals = 0;

  for (std::size_t i = 0; i < schedule.slices.size(); ++i) {
    RunResult r = factory(static_cast<int>(i), split_seed(master_seed, i),
                          schedule.slices[i]);
    total_evals += r.evaluations;
    const bool success = r.termination == Termination::TargetHit;
    const bool better =
        !have_best || (success && !best_success) ||
        (success == best_success && r.best_fitness > best.best_fitness);
    if (better) {
      best = std::move(r);
      best_success = success;
      have_best = true;
    }
    if (best_success) break;
  }
  best.evaluations = total_evals;
  return best;
}

}  // namespace nes
