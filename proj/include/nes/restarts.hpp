#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "nes/engine.hpp"

namespace nes {

/// Geometric budget-slice schedule: slice_i = round(p (1-p)^(i-1) B),
/// truncated at the first slice below min_slice and capped so the slices
/// never sum past the total budget. Time is measured in fitness evaluations.
struct RestartSchedule {
  double p = 1.0;
  long total_budget = 0;
  long min_slice = 0;
  std::vector<long> slices;
};

RestartSchedule schedule_slices(double p, long total_budget, long min_slice);

/// Creates one independent run: (run index, seed, evaluation budget).
using RunFactory =
    std::function<RunResult(int index, std::uint64_t seed, long budget)>;

/// Executes one run per slice with seeds split deterministically from the
/// master seed, stopping early once a run hits its target. Returns the best
/// RunResult (success first, then best fitness, then lowest index), with
/// `evaluations` replaced by the total spent across all executed runs.
RunResult interleaved_runner(const RunFactory& factory,
                             const RestartSchedule& schedule,
                             std::uint64_t master_seed);

}  // namespace nes
