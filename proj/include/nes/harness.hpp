#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nes/benchmarks.hpp"
#include "nes/engine.hpp"

namespace nes {

/// One experiment: algorithm + objective + budget + seeds + overrides.
/// Zero-valued hyperparameters mean "use the dimension-dependent default";
/// parse_config resolves them.
struct ExperimentSpec {
  std::string id = "exp";
  std::string algorithm = "xnes";
  std::string objective = "sphere";
  int dim = 2;
  std::uint64_t instance_seed = 1;
  int repetitions = 1;
  std::uint64_t master_seed = 1;
  double target_precision = 1e-7;
  long budget = 100000;

  int lambda = 0;
  double eta_mu = 0.0;
  double eta_sigma = 0.0;
  double eta_sbar = 0.0;
  double alpha = 0.1;
  bool importance_mixing = false;
  bool adaptation_sampling = false;
  double restart_p = 1.0;
  long min_slice = 0;  // 0 = 50 * dim
  double sigma0 = 1.0;
  std::vector<double> mu0;  // empty = origin

  void resolve_defaults();
};

/// Parses a JSON experiment description and fills unset hyperparameters with
/// their defaults. Unknown keys and type mismatches raise
/// std::invalid_argument naming the offending key.
ExperimentSpec parse_config(const std::string& json_text);

struct RunOutcome {
  int run_index = 0;
  std::uint64_t seed = 0;
  RunResult result;
  double best_objective = 0.0;  // on the objective's own scale
  bool success = false;
  bool maximize = false;  // direction of the underlying objective
};

struct AggregateReport {
  std::string experiment_id;
  int runs = 0;
  int successes = 0;
  double success_rate = 0.0;
  // Evaluations-to-target quartiles over successful runs only.
  double evals_q25 = 0.0, evals_median = 0.0, evals_q75 = 0.0;
  // Best objective value distribution over all runs.
  double best_min = 0.0, best_median = 0.0, best_max = 0.0;
};

/// Runs `repetitions` independent runs with seeds split from the master seed.
/// Per-run failures are recorded as error terminations, not rethrown.
std::vector<RunOutcome> execute_experiment(const ExperimentSpec& spec);

AggregateReport aggregate(const std::string& experiment_id,
                          const std::vector<RunOutcome>& outcomes);

/// Summary CSV, one row per run:
/// experiment,run,seed,termination,evaluations,best_fitness.
/// Byte-identical output for identical inputs. Throws on empty results.
void emit_csv(const std::string& path, const std::string& experiment_id,
              const std::vector<RunOutcome>& outcomes);

/// Aggregate CSV, one row per report.
void emit_aggregate_csv(const std::string& path,
                        const std::vector<AggregateReport>& reports);

/// JSON-lines trace: one generation record per line with the state snapshot.
/// Throws on empty results.
void emit_jsonl(const std::string& path, const std::string& experiment_id,
                const std::vector<RunOutcome>& outcomes);

/// Builds the engine objective (negated for minimization) plus the internal
/// target from a benchmark objective.
struct PreparedObjective {
  Objective objective;
  FitnessFn internal;           // maximized by the engine
  std::optional<double> target; // internal scale
};
PreparedObjective prepare_objective(const std::string& name, int dim,
                                    std::uint64_t instance_seed,
                                    double target_precision);

}  // namespace nes
