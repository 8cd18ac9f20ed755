// smc-optl: run the built-in experiments or a JSON-configured sampler and
// write trace/study CSVs plus a config echo.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "smc_optl/experiments.hpp"

namespace fs = std::filesystem;
using namespace smc_optl;

namespace {

struct CommonArgs {
  std::string experiment = "2d_toy";
  std::optional<long long> n;
  std::optional<long long> k;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::optional<double> ess_threshold;
  std::optional<std::string> resampling;
  std::string out = ".";
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--experiment", a.experiment, "Built-in name (2d_toy, bimodal) or path to a config JSON");
  cmd->add_option("--n", a.n, "Number of particles");
  cmd->add_option("--k", a.k, "Number of iterations");
  cmd->add_option("--seed", a.seed, "Base seed; replicate r uses seed + r");
  cmd->add_option("--replicates", a.replicates, "Number of independent replicates");
  cmd->add_option("--ess-threshold", a.ess_threshold, "Resample when ESS/N falls below this ratio");
  cmd->add_option("--resampling", a.resampling, "multinomial (default) or systematic");
  cmd->add_option("--out", a.out, "Output directory");
}

ExperimentConfig resolve(const CommonArgs& a) {
  const bool builtin =
      std::find(builtin_names().begin(), builtin_names().end(), a.experiment) != builtin_names().end();
  ExperimentConfig c = builtin || !fs::exists(a.experiment) ? builtin_config(a.experiment) : load_config(a.experiment);
  if (a.n) c.num_particles = *a.n;
  if (a.k) c.num_iterations = *a.k;
  if (a.seed) c.seed = *a.seed;
  if (a.replicates) c.replicates = *a.replicates;
  if (a.ess_threshold) c.ess_threshold_ratio = *a.ess_threshold;
  if (a.resampling) c.resampling = parse_resampling_scheme(*a.resampling);
  return c;
}

void write_config_echo(const ExperimentConfig& c, const fs::path& dir, const std::vector<LKernelStrategy>& strategies) {
  nlohmann::json echo = to_json(c);
  if (!strategies.empty()) {
    std::vector<std::string> names;
    for (const auto& s : strategies) {
      names.push_back(s.name());
    }
    echo["strategies"] = names;
  }
  std::ofstream file(dir / "config.json");
  if (!file) {
    throw IoError("cannot write '" + (dir / "config.json").string() + "'");
  }
  file << echo.dump(2) << '\n';
}

std::string file_safe(std::string name) {
  std::replace(name.begin(), name.end(), ':', '_');
  return name;
}

int cmd_run(const CommonArgs& a, const std::string& strategy) {
  ExperimentConfig c = resolve(a);
  if (!strategy.empty()) {
    c.strategy = LKernelStrategy::parse(strategy);
  }
  c.validate();
  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_config_echo(c, dir, {});

  int status = 0;
  for (int r = 0; r < c.replicates; ++r) {
    ExperimentConfig rc = c;
    rc.seed = c.seed + static_cast<std::uint64_t>(r);
    const fs::path trace = dir / (r == 0 ? std::string("trace.csv") : "trace_" + std::to_string(r) + ".csv");
    try {
      const RunRecord rec = run(rc);
      emit_csv(rec, trace);
      const auto& last = rec.final();
      std::cout << c.name << " strategy=" << c.strategy.name() << " seed=" << rc.seed
                << " resamples=" << rec.resample_count() << " recycled_mean=" << last.recycled_mean.transpose()
                << '\n';
    } catch (const RunAbortedError& e) {
      emit_csv(e.partial(), trace);
      std::cerr << "seed " << rc.seed << ": " << e.what() << '\n';
      status = 2;
    }
  }
  return status;
}

int cmd_study(const CommonArgs& a, const std::vector<std::string>& strategy_names, bool final_iteration,
              unsigned threads) {
  ExperimentConfig c = resolve(a);
  std::vector<LKernelStrategy> strategies;
  for (const auto& s : strategy_names) {
    strategies.push_back(LKernelStrategy::parse(s));
  }
  if (strategies.empty()) {
    strategies = default_strategies(c.name);
  }
  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_config_echo(c, dir, strategies);

  StudyOptions opts;
  opts.final_iteration = final_iteration;
  opts.keep_traces = true;
  opts.threads = threads;
  const StudyReport report = run_study(c, strategies, opts);
  emit_csv(report, dir / "study.csv");

  int status = 0;
  for (const auto& sr : report.strategies) {
    int total = 0;
    for (const auto& r : sr.replicates) {
      total += r.resample_count;
      status = r.ok() ? status : 2;
    }
    const auto& first = sr.replicates.front();
    if (first.record) {
      emit_csv(*first.record, dir / ("trace_" + file_safe(sr.strategy.name()) + ".csv"));
    }
    std::cout << sr.strategy.name() << ": mean resamples "
              << static_cast<double>(total) / static_cast<double>(sr.replicates.size()) << ", variance";
    for (std::size_t k = 0; k < report.moment_names.size(); ++k) {
      std::cout << ' ' << report.moment_names[k] << '=' << sr.variance[static_cast<Eigen::Index>(k)];
    }
    std::cout << '\n';
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential Monte Carlo sampler with approximately optimal L-kernels"};
  app.require_subcommand(1);

  CommonArgs run_args;
  std::string strategy;
  auto* run_cmd = app.add_subcommand("run", "Run one strategy, write trace.csv and config.json");
  add_common(run_cmd, run_args);
  run_cmd->add_option("--strategy", strategy, "forward | gauss-opt | gmm-opt:M");

  CommonArgs study_args;
  std::vector<std::string> strategies;
  bool final_iteration = false;
  unsigned threads = 0;
  auto* study_cmd = app.add_subcommand("study", "Compare strategies across replicates, write study.csv");
  add_common(study_cmd, study_args);
  study_cmd->add_option("--strategy,--strategies", strategies, "Strategies to compare (repeat or comma-separate)")
      ->delimiter(',');
  study_cmd->add_flag("--final-iteration", final_iteration, "Use final-iteration instead of recycled estimates");
  study_cmd->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      return cmd_run(run_args, strategy);
    }
    return cmd_study(study_args, strategies, final_iteration, threads);
  } catch (const std::exception& e) {
    std::cerr << "smc-optl: " << e.what() << '\n';
    return 1;
  }
}
