// Command-line harness: single runs, campaign files, and dimension sweeps.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nes/harness.hpp"

namespace {

struct CommonFlags {
  std::string algo;
  std::string objective;
  int dim = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::uint64_t instance_seed = 0;
  bool instance_set = false;
  long budget = 0;
  double target = 0.0;
  int pop_size = 0;
  double eta_sigma = 0.0;
  double eta_sbar = 0.0;
  double alpha = -1.0;
  bool importance_mixing = false;
  bool adaptation_sampling = false;
  double restart_p = 0.0;
  double sigma0 = 0.0;
  int repetitions = 0;
  std::string out_prefix;
};

void add_common_flags(CLI::App* cmd, CommonFlags* flags) {
  cmd->add_option("--algo", flags->algo,
                  "algorithm: plain|canonical|xnes|snes|1p1-xnes|1p1-snes|"
                  "1p1-gauss|1p1-cauchy");
  cmd->add_option("--objective", flags->objective,
                  "objective: sphere|ellipsoid|rotated-ellipsoid|rosenbrock|"
                  "2rosen|random-basin|lennard-jones");
  cmd->add_option("--dim", flags->dim, "problem dimension");
  cmd->add_option("--seed", flags->seed, "master seed")
      ->each([flags](const std::string&) { flags->seed_set = true; });
  cmd->add_option("--instance-seed", flags->instance_seed,
                  "objective instance seed")
      ->each([flags](const std::string&) { flags->instance_set = true; });
  cmd->add_option("--budget", flags->budget, "evaluation budget per run");
  cmd->add_option("--target", flags->target, "target precision");
  cmd->add_option("--pop-size", flags->pop_size, "population size");
  cmd->add_option("--eta-sigma", flags->eta_sigma, "covariance learning rate");
  cmd->add_option("--eta-sbar", flags->eta_sbar, "separable learning rate");
  cmd->add_option("--alpha", flags->alpha,
                  "importance mixing minimal refresh rate");
  cmd->add_flag("--importance-mixing", flags->importance_mixing,
                "reuse samples across generations");
  cmd->add_flag("--adaptation-sampling", flags->adaptation_sampling,
                "adapt the covariance learning rate online");
  cmd->add_option("--restart-p", flags->restart_p,
                  "restart fraction in (0,1]; below 1 enables restarts");
  cmd->add_option("--sigma0", flags->sigma0, "initial step size");
  cmd->add_option("--repetitions", flags->repetitions, "independent runs");
  cmd->add_option("--out", flags->out_prefix,
                  "output prefix ('<prefix>.csv', '<prefix>.jsonl', "
                  "'<prefix>_aggregate.csv')");
}

void apply_flags(const CommonFlags& flags, nes::ExperimentSpec* spec) {
  if (!flags.algo.empty()) spec->algorithm = flags.algo;
  if (!flags.objective.empty()) spec->objective = flags.objective;
  if (flags.dim > 0) spec->dim = flags.dim;
  if (flags.seed_set) spec->master_seed = flags.seed;
  if (flags.instance_set) spec->instance_seed = flags.instance_seed;
  if (flags.budget > 0) spec->budget = flags.budget;
  if (flags.target > 0.0) spec->target_precision = flags.target;
  if (flags.pop_size > 0) spec->lambda = flags.pop_size;
  if (flags.eta_sigma > 0.0) spec->eta_sigma = flags.eta_sigma;
  if (flags.eta_sbar > 0.0) spec->eta_sbar = flags.eta_sbar;
  if (flags.alpha >= 0.0) spec->alpha = flags.alpha;
  if (flags.importance_mixing) spec->importance_mixing = true;
  if (flags.adaptation_sampling) spec->adaptation_sampling = true;
  if (flags.restart_p > 0.0) spec->restart_p = flags.restart_p;
  if (flags.sigma0 > 0.0) spec->sigma0 = flags.sigma0;
  if (flags.repetitions > 0) spec->repetitions = flags.repetitions;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_experiments(const std::vector<nes::ExperimentSpec>& specs,
                    const std::string& out_prefix) {
  std::vector<nes::AggregateReport> reports;
  for (const nes::ExperimentSpec& spec : specs) {
    const std::vector<nes::RunOutcome> outcomes = nes::execute_experiment(spec);
    const nes::AggregateReport report = nes::aggregate(spec.id, outcomes);
    reports.push_back(report);
    std::printf(
        "%-24s algo=%-10s obj=%-18s d=%-3d runs=%-3d success=%5.1f%% "
        "median-evals=%g best-median=%g\n",
        spec.id.c_str(), spec.algorithm.c_str(), spec.objective.c_str(),
        spec.dim, report.runs, 100.0 * report.success_rate,
        report.evals_median, report.best_median);
    if (!out_prefix.empty()) {
      nes::emit_csv(out_prefix + "_" + spec.id + ".csv", spec.id, outcomes);
      nes::emit_jsonl(out_prefix + "_" + spec.id + ".jsonl", spec.id,
                      outcomes);
    }
  }
  if (!out_prefix.empty()) {
    nes::emit_aggregate_csv(out_prefix + "_aggregate.csv", reports);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nesopt: natural evolution strategies benchmark harness"};
  app.require_subcommand(1);

  CommonFlags run_flags, bench_flags, sweep_flags;
  std::string run_config, bench_file;
  std::string sweep_dims = "2,4,8";

  CLI::App* cmd_run = app.add_subcommand("run", "execute one experiment");
  cmd_run->add_option("--config", run_config, "JSON experiment file");
  add_common_flags(cmd_run, &run_flags);

  CLI::App* cmd_bench =
      app.add_subcommand("bench", "execute a campaign file (JSON array)");
  cmd_bench->add_option("file", bench_file, "campaign file")->required();
  add_common_flags(cmd_bench, &bench_flags);

  CLI::App* cmd_sweep =
      app.add_subcommand("sweep", "sweep one experiment over dimensions");
  cmd_sweep->add_option("--dims", sweep_dims, "comma-separated dimensions");
  add_common_flags(cmd_sweep, &sweep_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      nes::ExperimentSpec spec;
      if (!run_config.empty()) {
        spec = nes::parse_config(read_file(run_config));
      }
      apply_flags(run_flags, &spec);
      spec.resolve_defaults();
      return run_experiments({spec}, run_flags.out_prefix);
    }
    if (cmd_bench->parsed()) {
      const nlohmann::json doc = nlohmann::json::parse(read_file(bench_file));
      if (!doc.is_array()) {
        throw std::invalid_argument("campaign file must be a JSON array");
      }
      std::vector<nes::ExperimentSpec> specs;
      int index = 0;
      for (const auto& item : doc) {
        nes::ExperimentSpec spec = nes::parse_config(item.dump());
        if (spec.id == "exp") spec.id = "exp" + std::to_string(index);
        apply_flags(bench_flags, &spec);
        spec.resolve_defaults();
        specs.push_back(std::move(spec));
        ++index;
      }
      return run_experiments(specs, bench_flags.out_prefix);
    }
    if (cmd_sweep->parsed()) {
      std::vector<nes::ExperimentSpec> specs;
      std::stringstream ss(sweep_dims);
      std::string token;
      while (std::getline(ss, token, ',')) {
        nes::ExperimentSpec spec;
        apply_flags(sweep_flags, &spec);
        spec.dim = std::stoi(token);
        spec.lambda = sweep_flags.pop_size;  // re-resolve per dimension
        spec.eta_sigma = sweep_flags.eta_sigma;
        spec.eta_sbar = sweep_flags.eta_sbar;
        spec.id = spec.algorithm + "_" + spec.objective + "_d" + token;
        spec.resolve_defaults();
        specs.push_back(std::move(spec));
      }
      return run_experiments(specs, sweep_flags.out_prefix);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "nesopt: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
