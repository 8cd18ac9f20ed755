#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "smc_optl/experiments.hpp"

namespace {

using namespace smc_optl;

ExperimentConfig quick(const std::string& name, Eigen::Index n, Eigen::Index k, int replicates) {
  ExperimentConfig c = builtin_config(name);
  c.num_particles = n;
  c.num_iterations = k;
  c.replicates = replicates;
  return c;
}

std::string study_csv(const StudyReport& report) {
  std::ostringstream out;
  write_study_csv(report, out);
  return out.str();
}

TEST(Builtins, TwoDimensionalToy) {
  const ExperimentConfig c = builtin_config("2d_toy");
  EXPECT_EQ(c.dim(), 2);
  EXPECT_EQ(c.num_particles, 500);
  EXPECT_EQ(c.num_iterations, 100);
  const GaussianParams m = c.target.moments();
  EXPECT_EQ(m.mean, (Vector{{3.0, 2.0}}));
  EXPECT_EQ(m.cov, Matrix::Identity(2, 2));
  EXPECT_EQ(c.proposal.initial.mean, Vector::Zero(2));
  EXPECT_EQ(c.proposal.random_walk_cov, Matrix::Identity(2, 2));
  EXPECT_NO_THROW(c.validate());
}

TEST(Builtins, Bimodal) {
  const ExperimentConfig c = builtin_config("bimodal");
  EXPECT_EQ(c.dim(), 1);
  EXPECT_EQ(c.num_iterations, 1000);
  const GaussianParams m = c.target.moments();
  EXPECT_NEAR(m.mean[0], 0.0, 1e-15);
  EXPECT_NEAR(m.cov(0, 0), 10.0, 1e-12);  // 1 + 3^2
  EXPECT_NEAR(c.proposal.random_walk_cov(0, 0), 0.1, 1e-15);
  EXPECT_FALSE(c.notes.empty());
}

TEST(Builtins, UnknownNameListsChoices) {
  try {
    builtin_config("trimodal");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("2d_toy"), std::string::npos);
    EXPECT_NE(what.find("bimodal"), std::string::npos);
  }
}

TEST(Moments, NamesAndVectorAgree) {
  EXPECT_EQ(moment_names(2), (std::vector<std::string>{"mean_0", "mean_1", "cov_00", "cov_01", "cov_11"}));
  EXPECT_EQ(moment_names(1), (std::vector<std::string>{"mean_0", "cov_00"}));
  const Vector v = moment_vector(Vector{{1.0, 2.0}}, Matrix{{3.0, 4.0}, {4.0, 5.0}});
  EXPECT_EQ(v, (Vector{{1.0, 2.0, 3.0, 4.0, 5.0}}));
}

TEST(Moments, ColumnSampleVariance) {
  Matrix obs(4, 2);
  obs << 1, 10, 2, 10, 3, 10, 4, 10;
  const Vector v = column_sample_variance(obs);
  EXPECT_NEAR(v[0], 5.0 / 3.0, 1e-15);
  EXPECT_EQ(v[1], 0.0);
  EXPECT_TRUE(std::isnan(column_sample_variance(Matrix::Ones(1, 2))[0]));
}

TEST(Study, SameSeedGivesZeroVariance) {
  StudyOptions opts;
  opts.same_seed = true;
  const StudyReport r = run_study(quick("2d_toy", 60, 6, 3), {LKernelStrategy::gaussian_opt()}, opts);
  ASSERT_EQ(r.strategies.size(), 1u);
  for (const auto& rep : r.strategies[0].replicates) EXPECT_TRUE(rep.ok()) << rep.error;
  EXPECT_LT(r.strategies[0].variance.cwiseAbs().maxCoeff(), 1e-24);
}

TEST(Study, SeedsAreBasePlusReplicate) {
  ExperimentConfig c = quick("2d_toy", 40, 4, 3);
  c.seed = 100;
  const StudyReport r = run_study(c, {LKernelStrategy::forward_proposal()});
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(r.strategies[0].replicates[static_cast<std::size_t>(i)].seed, 100u + static_cast<unsigned>(i));
  }
}

TEST(Study, ReplicateMatchesStandaloneRun) {
  ExperimentConfig c = quick("2d_toy", 50, 7, 2);
  c.seed = 9;
  StudyOptions opts;
  opts.keep_traces = true;
  const StudyReport r = run_study(c, {LKernelStrategy::gaussian_opt()}, opts);
  ExperimentConfig single = c;
  single.strategy = LKernelStrategy::gaussian_opt();
  single.seed = 10;
  const RunRecord direct = run(single);
  const auto& rep = r.strategies[0].replicates[1];
  EXPECT_EQ(rep.moments, moment_vector(direct.final().recycled_mean, direct.final().recycled_cov));
  EXPECT_EQ(rep.resample_count, direct.resample_count());
  ASSERT_TRUE(rep.record.has_value());
  EXPECT_EQ(rep.record->iterations.size(), 7u);
}

TEST(Study, FinalIterationOption) {
  ExperimentConfig c = quick("2d_toy", 50, 5, 1);
  StudyOptions opts;
  opts.final_iteration = true;
  const StudyReport r = run_study(c, {LKernelStrategy::forward_proposal()}, opts);
  c.strategy = LKernelStrategy::forward_proposal();
  const RunRecord direct = run(c);
  EXPECT_EQ(r.strategies[0].replicates[0].moments, moment_vector(direct.final().mean, direct.final().cov));
}

TEST(Study, ThreadCountDoesNotChangeResults) {
  const ExperimentConfig c = quick("bimodal", 60, 20, 4);
  const std::vector<LKernelStrategy> s{LKernelStrategy::forward_proposal(), LKernelStrategy::gmm_opt(2)};
  StudyOptions one;
  one.threads = 1;
  StudyOptions many;
  many.threads = 3;
  EXPECT_EQ(study_csv(run_study(c, s, one)), study_csv(run_study(c, s, many)));
}

TEST(Study, FailedReplicatesAreRecordedNotFatal) {
  // Four particles cannot support a four-dimensional joint fit.
  const StudyReport r = run_study(quick("2d_toy", 4, 5, 2), {LKernelStrategy::gaussian_opt()});
  for (const auto& rep : r.strategies[0].replicates) {
    EXPECT_FALSE(rep.ok());
    EXPECT_TRUE(rep.moments.array().isNaN().all());
  }
  const std::string csv = study_csv(r);
  EXPECT_EQ(csv.find(",ok\n"), std::string::npos);
}

TEST(StudyCsv, EmptyStudyIsHeaderOnly) {
  const StudyReport r = run_study(quick("2d_toy", 40, 3, 1), {});
  EXPECT_EQ(study_csv(r),
            "strategy,replicate,seed,resample_count,final_mean_0,final_mean_1,final_cov_00,final_cov_01,"
            "final_cov_11,status\n");
}

TEST(StudyCsv, RoundTripsAtFullPrecision) {
  const StudyReport r =
      run_study(quick("2d_toy", 50, 6, 3), {LKernelStrategy::forward_proposal(), LKernelStrategy::gaussian_opt()});
  std::istringstream in(study_csv(r));
  const CsvTable t = read_csv(in);
  ASSERT_EQ(t.rows.size(), 2u * 3u + 2u);
  const std::size_t first = t.column("final_mean_0");
  for (std::size_t s = 0; s < 2; ++s) {
    for (std::size_t rep = 0; rep < 3; ++rep) {
      const auto& row = t.rows[s * 3 + rep];
      const auto& result = r.strategies[s].replicates[rep];
      EXPECT_EQ(row[t.column("strategy")], r.strategies[s].strategy.name());
      EXPECT_EQ(std::stoi(row[t.column("resample_count")]), result.resample_count);
      for (Eigen::Index k = 0; k < result.moments.size(); ++k) {
        EXPECT_EQ(std::stod(row[first + static_cast<std::size_t>(k)]), result.moments[k]);
      }
    }
    const auto& summary = t.rows[6 + s];
    EXPECT_EQ(summary[t.column("replicate")], "variance");
    EXPECT_EQ(summary.back(), "summary");
    for (Eigen::Index k = 0; k < r.strategies[s].variance.size(); ++k) {
      EXPECT_EQ(std::stod(summary[first + static_cast<std::size_t>(k)]), r.strategies[s].variance[k]);
    }
  }
}

TEST(TraceCsv, ColumnsAndRoundTrip) {
  ExperimentConfig c = quick("2d_toy", 60, 5, 1);
  c.strategy = LKernelStrategy::gaussian_opt();
  const RunRecord rec = run(c);
  std::ostringstream out;
  write_trace_csv(rec, out);
  std::istringstream in(out.str());
  const CsvTable t = read_csv(in);
  EXPECT_EQ(t.header,
            (std::vector<std::string>{"iteration", "ess", "resampled", "mean_0", "mean_1", "cov_00", "cov_01", "cov_10",
                                      "cov_11", "recycled_mean_0", "recycled_mean_1", "recycled_cov_00",
                                      "recycled_cov_01", "recycled_cov_10", "recycled_cov_11"}));
  ASSERT_EQ(t.rows.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) {
    const auto& it = rec.iterations[k];
    EXPECT_EQ(std::stoi(t.rows[k][0]), it.iteration);
    EXPECT_EQ(std::stod(t.rows[k][1]), it.ess);
    EXPECT_EQ(t.rows[k][2], it.resampled ? "1" : "0");
    EXPECT_EQ(std::stod(t.rows[k][t.column("cov_01")]), it.cov(0, 1));
    EXPECT_EQ(std::stod(t.rows[k][t.column("recycled_mean_1")]), it.recycled_mean[1]);
  }
}

TEST(TraceCsv, ByteIdenticalForSameSeed) {
  ExperimentConfig c = quick("bimodal", 80, 30, 1);
  c.strategy = LKernelStrategy::gmm_opt(2);
  c.seed = 77;
  std::ostringstream a, b;
  write_trace_csv(run(c), a);
  write_trace_csv(run(c), b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(TraceCsv, MatchesGoldenFile) {
  // Regenerate with: smc-optl run --experiment 2d_toy --strategy gauss-opt --n 40 --k 6 --seed 3 --out <dir>
  ExperimentConfig c = quick("2d_toy", 40, 6, 1);
  c.strategy = LKernelStrategy::gaussian_opt();
  c.seed = 3;
  const RunRecord rec = run(c);
  const CsvTable golden = read_csv(std::filesystem::path(SMC_OPTL_GOLDEN_DIR) / "trace_2d_toy_gauss_opt.csv");
  std::ostringstream out;
  write_trace_csv(rec, out);
  std::istringstream in(out.str());
  const CsvTable now = read_csv(in);
  ASSERT_EQ(now.header, golden.header);
  ASSERT_EQ(now.rows.size(), golden.rows.size());
  for (std::size_t r = 0; r < now.rows.size(); ++r) {
    for (std::size_t f = 0; f < now.header.size(); ++f) {
      const double expected = std::stod(golden.rows[r][f]);
      EXPECT_NEAR(std::stod(now.rows[r][f]), expected, 1e-9 * std::max(1.0, std::abs(expected)))
          << "row " << r << " column " << now.header[f];
    }
  }
}

TEST(EmitCsv, UnwritablePathRaisesIoError) {
  ExperimentConfig c = quick("2d_toy", 30, 2, 1);
  EXPECT_THROW(emit_csv(run(c), std::filesystem::path("/nonexistent-dir/x/trace.csv")), IoError);
}

TEST(ConfigJson, RoundTripPreservesEveryField) {
  for (const auto& name : builtin_names()) {
    ExperimentConfig c = builtin_config(name);
    c.strategy = LKernelStrategy::gmm_opt(3);
    c.seed = 12345;
    c.replicates = 7;
    c.resampling = ResamplingScheme::kSystematic;
    const nlohmann::json j = to_json(c);
    const ExperimentConfig back = config_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(to_json(back), j);
    EXPECT_EQ(back.num_particles, c.num_particles);
    EXPECT_EQ(back.strategy, c.strategy);
    EXPECT_EQ(back.resampling, c.resampling);
  }
}

TEST(ConfigJson, EchoHasNestedRowMajorCovariances) {
  const nlohmann::json j = to_json(builtin_config("2d_toy"));
  EXPECT_EQ(j["target"]["cov"], nlohmann::json::parse("[[1.0, 0.0], [0.0, 1.0]]"));
  EXPECT_EQ(j["target_moments"]["mean"], nlohmann::json::parse("[3.0, 2.0]"));
  EXPECT_EQ(j["strategy"], "forward");
}

TEST(ConfigJson, ErrorsAreConfigErrors) {
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"name": "x"})")), ConfigError);
  nlohmann::json j = to_json(builtin_config("2d_toy"));
  j["target"]["cov"] = nlohmann::json::parse("[[1.0, 2.0], [2.0, 1.0]]");
  EXPECT_THROW(config_from_json(j), ConfigError);
  j = to_json(builtin_config("2d_toy"));
  j["strategy"] = "gmm-opt:0";
  EXPECT_THROW(config_from_json(j), ConfigError);
  j = to_json(builtin_config("2d_toy"));
  j["N"] = 1;
  EXPECT_THROW(config_from_json(j), ConfigError);
}

TEST(ConfigJson, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "smc_optl_config_test.json";
  {
    std::ofstream f(path);
    f << to_json(builtin_config("bimodal")).dump(2);
  }
  const ExperimentConfig c = load_config(path);
  EXPECT_EQ(c.name, "bimodal");
  std::filesystem::remove(path);
  EXPECT_THROW(load_config(path), IoError);
}

}  // namespace
