#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "smc_optl/config.hpp"
#include "smc_optl/sampler.hpp"

namespace smc_optl {

/// Names accepted by builtin_config().
const std::vector<std::string>& builtin_names();

/// "2d_toy": N([3,2], I) target, q(x_1) = N(0, I), random walk N(x, I), N=500, K=100.
/// "bimodal": 0.5 N(-3, 1) + 0.5 N(3, 1), q(x_1) = N(0, 3), random walk variance 0.1,
/// N=500, K=1000. Both use the forward-proposal kernel and seed 0.
ExperimentConfig builtin_config(const std::string& name);

/// Default strategy set compared for a built-in experiment.
std::vector<LKernelStrategy> default_strategies(const std::string& name);

/// Names of the moment entries, e.g. mean_0, mean_1, cov_00, cov_01, cov_11.
std::vector<std::string> moment_names(Eigen::Index dim);
/// Values in moment_names() order (upper triangle of the covariance).
Vector moment_vector(const Vector& mean, const Matrix& cov);

struct ReplicateResult {
  int replicate = 0;
  std::uint64_t seed = 0;
  int resample_count = 0;
  /// Recycled (or final-iteration, see StudyOptions) moment entries.
  Vector moments;
  RecyclingState recycling;
  /// Empty on success.
  std::string error;
  /// Trace of the replicate, kept only when StudyOptions::keep_traces.
  std::optional<RunRecord> record;

  [[nodiscard]] bool ok() const { return error.empty(); }
};

struct StrategyReport {
  LKernelStrategy strategy;
  std::vector<ReplicateResult> replicates;
  /// Across-replicate sample variance (denominator R-1) per moment entry, successful replicates only.
  Vector variance;
};

struct StudyReport {
  std::string experiment;
  Eigen::Index dim = 0;
  std::vector<std::string> moment_names;
  std::vector<StrategyReport> strategies;
};

struct StudyOptions {
  /// Use the final-iteration estimates instead of the recycled ones.
  bool final_iteration = false;
  bool keep_traces = false;
  /// Replicate r normally uses seed base + r; forces every replicate onto the base seed.
  bool same_seed = false;
  unsigned threads = 0;  ///< 0 selects std::thread::hardware_concurrency()
};

/// Runs every strategy x replicate with seed = config.seed + replicate. Replicate
/// failures are recorded without aborting the study.
StudyReport run_study(const ExperimentConfig& config, const std::vector<LKernelStrategy>& strategies,
                      const StudyOptions& options = {});

/// Unbiased sample variance of each column; rows are observations.
Vector column_sample_variance(const Matrix& observations);

void write_trace_csv(const RunRecord& record, std::ostream& out);
void write_study_csv(const StudyReport& report, std::ostream& out);
void emit_csv(const RunRecord& record, const std::filesystem::path& path);
void emit_csv(const StudyReport& report, const std::filesystem::path& path);

/// A parsed CSV: header names and rows of raw fields.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::size_t column(const std::string& name) const;
};
CsvTable read_csv(std::istream& in);
CsvTable read_csv(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace smc_optl
