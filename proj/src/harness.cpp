#include "nes/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "nes/restarts.hpp"
#include "nes/rng.hpp"

namespace nes {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = p * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - lo;
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

void ExperimentSpec::resolve_defaults() {
  const Algorithm algo = algorithm_from_string(algorithm);
  if (lambda == 0) {
    lambda = is_hillclimber(algo) ? 1 : default_population(dim);
  }
  if (eta_mu == 0.0) eta_mu = default_eta_mu();
  if (eta_sigma == 0.0) eta_sigma = default_eta_sigma_full(dim);
  if (eta_sbar == 0.0) eta_sbar = default_eta_sbar(dim);
  if (min_slice == 0) min_slice = 50L * dim;
}

ExperimentSpec parse_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("parse_config: ") + e.what());
  }
  if (!j.is_object()) {
    throw std::invalid_argument("parse_config: top level must be an object");
  }

  ExperimentSpec spec;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "id") spec.id = value.get<std::string>();
      else if (key == "algo" || key == "algorithm")
        spec.algorithm = value.get<std::string>();
      else if (key == "objective") spec.objective = value.get<std::string>();
      else if (key == "dim") spec.dim = value.get<int>();
      else if (key == "instance_seed")
        spec.instance_seed = value.get<std::uint64_t>();
      else if (key == "repetitions") spec.repetitions = value.get<int>();
      else if (key == "seed" || key == "master_seed")
        spec.master_seed = value.get<std::uint64_t>();
      else if (key == "target") spec.target_precision = value.get<double>();
      else if (key == "budget") spec.budget = value.get<long>();
      else if (key == "pop_size" || key == "lambda")
        spec.lambda = value.get<int>();
      else if (key == "eta_mu") spec.eta_mu = value.get<double>();
      else if (key == "eta_sigma") spec.eta_sigma = value.get<double>();
      else if (key == "eta_sbar") spec.eta_sbar = value.get<double>();
      else if (key == "alpha") spec.alpha = value.get<double>();
      else if (key == "importance_mixing")
        spec.importance_mixing = value.get<bool>();
      else if (key == "adaptation_sampling")
        spec.adaptation_sampling = value.get<bool>();
      else if (key == "restart_p") spec.restart_p = value.get<double>();
      else if (key == "min_slice") spec.min_slice = value.get<long>();
      else if (key == "sigma0") spec.sigma0 = value.get<double>();
      else if (key == "mu0") spec.mu0 = value.get<std::vector<double>>();
      else
        throw std::invalid_argument("parse_config: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception&) {
      throw std::invalid_argument("parse_config: bad value for key '" + key +
                                  "'");
    }
  }
  if (spec.repetitions < 1) {
    throw std::invalid_argument("parse_config: repetitions must be >= 1");
  }
  if (!(spec.target_precision > 0.0)) {
    throw std::invalid_argument("parse_config: target must be > 0");
  }
  algorithm_from_string(spec.algorithm);  // validate the name
  spec.resolve_defaults();
  return spec;
}

PreparedObjective prepare_objective(const std::string& name, int dim,
                                    std::uint64_t instance_seed,
                                    double target_precision) {
  PreparedObjective prepared;
  prepared.objective = standard_suite(name, dim, instance_seed);
  const Objective& obj = prepared.objective;
  const bool maximize = obj.maximize;
  auto eval = obj.eval;
  prepared.internal = maximize
                          ? eval
                          : [eval](const Eigen::VectorXd& x) {
                              return -eval(x);
                            };
  if (obj.optimum_value) {
    prepared.target = maximize ? *obj.optimum_value - target_precision
                               : -(*obj.optimum_value + target_precision);
  }
  return prepared;
}

std::vector<RunOutcome> execute_experiment(const ExperimentSpec& spec_in) {
  ExperimentSpec spec = spec_in;
  spec.resolve_defaults();
  const PreparedObjective prepared = prepare_objective(
      spec.objective, spec.dim, spec.instance_seed, spec.target_precision);

  RunConfig cfg;
  cfg.algorithm = algorithm_from_string(spec.algorithm);
  cfg.lambda = spec.lambda;
  cfg.eta_mu = spec.eta_mu;
  cfg.eta_sigma = spec.eta_sigma;
  cfg.eta_B = spec.eta_sigma;
  cfg.eta_sbar = spec.eta_sbar;
  cfg.importance_mixing = spec.importance_mixing;
  cfg.alpha = spec.alpha;
  cfg.adaptation_sampling = spec.adaptation_sampling;
  cfg.target = prepared.target;
  cfg.budget = spec.budget;
  cfg.sigma0 = spec.sigma0;
  if (spec.mu0.empty()) {
    cfg.mu0 = Eigen::VectorXd::Zero(spec.dim);
  } else {
    if (static_cast<int>(spec.mu0.size()) != spec.dim) {
      throw std::invalid_argument("execute_experiment: mu0 length != dim");
    }
    cfg.mu0 = Eigen::Map<const Eigen::VectorXd>(spec.mu0.data(), spec.dim);
  }

  const bool maximize = prepared.objective.maximize;
  std::vector<RunOutcome> outcomes;
  outcomes.reserve(spec.repetitions);
  for (int rep = 0; rep < spec.repetitions; ++rep) {
    RunOutcome outcome;
    outcome.run_index = rep;
    outcome.seed = split_seed(spec.master_seed, rep);
    try {
      if (spec.restart_p < 1.0) {
        const RestartSchedule schedule =
            schedule_slices(spec.restart_p, spec.budget, spec.min_slice);
        outcome.result = interleaved_runner(
            [&](int, std::uint64_t run_seed, long slice) {
              RunConfig slice_cfg = cfg;
              slice_cfg.budget = slice;
              slice_cfg.record_trace = false;
              return run(prepared.internal, slice_cfg, run_seed);
            },
            schedule, outcome.seed);
      } else {
        outcome.result = run(prepared.internal, cfg, outcome.seed);
      }
    } catch (const std::exception& e) {
      outcome.result.termination = Termination::Error;
      outcome.result.error_message = e.what();
    }
    outcome.maximize = maximize;
    outcome.best_objective =
        maximize ? outcome.result.best_fitness : -outcome.result.best_fitness;
    outcome.success = outcome.result.termination == Termination::TargetHit;
    outcomes.push_back(std::move(outcome));
  }
  return outcomes;
}

AggregateReport aggregate(const std::string& experiment_id,
                          const std::vector<RunOutcome>& outcomes) {
  AggregateReport report;
  report.experiment_id = experiment_id;
  report.runs = static_cast<int>(outcomes.size());
  std::vector<double> success_evals;
  std::vector<double> bests;
  for (const RunOutcome& o : outcomes) {
    bests.push_back(o.best_objective);
    if (o.success) {
      ++report.successes;
      success_evals.push_back(static_cast<double>(o.result.evaluations));
    }
  }
  report.success_rate =
      report.runs ? static_cast<double>(report.successes) / report.runs : 0.0;
  report.evals_q25 = quantile(success_evals, 0.25);
  report.evals_median = quantile(success_evals, 0.5);
  report.evals_q75 = quantile(success_evals, 0.75);
  report.best_min = quantile(bests, 0.0);
  report.best_median = quantile(bests, 0.5);
  report.best_max = quantile(bests, 1.0);
  return report;
}

void emit_csv(const std::string& path, const std::string& experiment_id,
              const std::vector<RunOutcome>& outcomes) {
  if (outcomes.empty()) {
    throw std::invalid_argument("emit_csv: no results");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_csv: cannot write " + path);
  out << "experiment,run,seed,termination,evaluations,best_fitness\n";
  for (const RunOutcome& o : outcomes) {
    out << experiment_id << ',' << o.run_index << ',' << o.seed << ','
        << to_string(o.result.termination) << ',' << o.result.evaluations
        << ',' << format_double(o.best_objective) << '\n';
  }
}

void emit_aggregate_csv(const std::string& path,
                        const std::vector<AggregateReport>& reports) {
  if (reports.empty()) {
    throw std::invalid_argument("emit_aggregate_csv: no reports");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_aggregate_csv: cannot write " + path);
  out << "experiment,runs,successes,success_rate,evals_q25,evals_median,"
         "evals_q75,best_min,best_median,best_max\n";
  for (const AggregateReport& r : reports) {
    out << r.experiment_id << ',' << r.runs << ',' << r.successes << ','
        << format_double(r.success_rate) << ',' << format_double(r.evals_q25)
        << ',' << format_double(r.evals_median) << ','
        << format_double(r.evals_q75) << ',' << format_double(r.best_min)
        << ',' << format_double(r.best_median) << ','
        << format_double(r.best_max) << '\n';
  }
}

void emit_jsonl(const std::string& path, const std::string& experiment_id,
                const std::vector<RunOutcome>& outcomes) {
  if (outcomes.empty()) {
    throw std::invalid_argument("emit_jsonl: no results");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_jsonl: cannot write " + path);
  for (const RunOutcome& o : outcomes) {
    for (const GenerationRecord& rec : o.result.trace) {
      nlohmann::json line;
      line["experiment"] = experiment_id;
      line["run"] = o.run_index;
      line["generation"] = rec.generation;
      line["evaluations"] = rec.evaluations;
      line["best_fitness"] = o.maximize ? rec.best_fitness : -rec.best_fitness;
      line["fresh"] = rec.fresh;
      line["sigma"] = rec.sigma;
      line["eta_sigma"] = rec.eta_sigma;
      line["mu"] = std::vector<double>(rec.mu.data(),
                                       rec.mu.data() + rec.mu.size());
      if (rec.sbar.size()) {
        line["sbar"] = std::vector<double>(rec.sbar.data(),
                                           rec.sbar.data() + rec.sbar.size());
      }
      if (rec.B.size()) {
        std::vector<double> flat(rec.B.data(), rec.B.data() + rec.B.size());
        line["B"] = flat;
      }
      out << line.dump() << '\n';
    }
  }
}

}  // namespace nes
