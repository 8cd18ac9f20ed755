// Python bindings. Configs cross the boundary as JSON text in the same schema
// as the CLI's config.json; the Python package converts to and from dicts.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "smc_optl/experiments.hpp"

namespace py = pybind11;
using namespace smc_optl;

namespace {

ExperimentConfig parse_config(const std::string& config_json) {
  try {
    return config_from_json(nlohmann::json::parse(config_json));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("cannot parse config JSON: ") + e.what());
  }
}

py::array_t<double> stack_matrices(const std::vector<const Matrix*>& ms, Eigen::Index d) {
  py::array_t<double> out({static_cast<py::ssize_t>(ms.size()), static_cast<py::ssize_t>(d),
                           static_cast<py::ssize_t>(d)});
  auto view = out.mutable_unchecked<3>();
  for (std::size_t k = 0; k < ms.size(); ++k) {
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        view(static_cast<py::ssize_t>(k), i, j) = (*ms[k])(i, j);
      }
    }
  }
  return out;
}

py::dict record_to_dict(const RunRecord& record) {
  const auto k = static_cast<Eigen::Index>(record.iterations.size());
  const Eigen::Index d = record.dim;
  Eigen::VectorXi iteration(k);
  Vector ess_values(k);
  Eigen::Matrix<bool, Eigen::Dynamic, 1> resampled(k);
  Matrix mean(k, d), recycled_mean(k, d);
  std::vector<const Matrix*> cov, recycled_cov;
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& it = record.iterations[static_cast<std::size_t>(i)];
    iteration[i] = it.iteration;
    ess_values[i] = it.ess;
    resampled[i] = it.resampled;
    mean.row(i) = it.mean.transpose();
    recycled_mean.row(i) = it.recycled_mean.transpose();
    cov.push_back(&it.cov);
    recycled_cov.push_back(&it.recycled_cov);
  }
  py::dict out;
  out["iteration"] = iteration;
  out["ess"] = ess_values;
  out["resampled"] = resampled;
  out["mean"] = mean;
  out["cov"] = stack_matrices(cov, d);
  out["recycled_mean"] = recycled_mean;
  out["recycled_cov"] = stack_matrices(recycled_cov, d);
  out["recycling_constants"] = record.iterations.empty() ? Vector() : record.final().recycling_constants;
  out["resample_count"] = record.resample_count();
  return out;
}

py::dict run_py(const std::string& config_json, const std::optional<std::string>& trace_path) {
  const ExperimentConfig config = parse_config(config_json);
  RunRecord record;
  {
    py::gil_scoped_release release;
    record = run(config);
    if (trace_path) {
      emit_csv(record, *trace_path);
    }
  }
  return record_to_dict(record);
}

py::dict study_py(const std::string& config_json, const std::vector<std::string>& strategy_names,
                  bool final_iteration, bool same_seed, unsigned threads, const std::optional<std::string>& csv_path) {
  const ExperimentConfig config = parse_config(config_json);
  std::vector<LKernelStrategy> strategies;
  for (const auto& s : strategy_names) {
    strategies.push_back(LKernelStrategy::parse(s));
  }
  StudyOptions options;
  options.final_iteration = final_iteration;
  options.same_seed = same_seed;
  options.threads = threads;
  StudyReport report;
  {
    py::gil_scoped_release release;
    report = run_study(config, strategies, options);
    if (csv_path) {
      emit_csv(report, *csv_path);
    }
  }
  py::dict per_strategy;
  const auto entries = static_cast<Eigen::Index>(report.moment_names.size());
  for (const auto& sr : report.strategies) {
    const auto r = static_cast<Eigen::Index>(sr.replicates.size());
    Matrix moments(r, entries);
    Eigen::VectorXi counts(r);
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> errors;
    for (Eigen::Index i = 0; i < r; ++i) {
      const auto& rep = sr.replicates[static_cast<std::size_t>(i)];
      moments.row(i) = rep.moments.transpose();
      counts[i] = rep.resample_count;
      seeds.push_back(rep.seed);
      errors.push_back(rep.error);
    }
    py::dict d;
    d["moments"] = moments;
    d["resample_count"] = counts;
    d["seed"] = seeds;
    d["error"] = errors;
    d["variance"] = sr.variance;
    per_strategy[py::str(sr.strategy.name())] = d;
  }
  py::dict out;
  out["experiment"] = report.experiment;
  out["moment_names"] = report.moment_names;
  out["strategies"] = per_strategy;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "SMC sampler with approximately optimal L-kernels";

  auto base = py::register_exception<Error>(m, "SmcError", PyExc_RuntimeError);
  py::register_exception<InvalidArgumentError>(m, "InvalidArgumentError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DegenerateWeightsError>(m, "DegenerateWeightsError", base.ptr());
  py::register_exception<SingularCovarianceError>(m, "SingularCovarianceError", base.ptr());
  py::register_exception<InsufficientSamplesError>(m, "InsufficientSamplesError", base.ptr());
  py::register_exception<RunAbortedError>(m, "RunAbortedError", base.ptr());
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("builtin_names", &builtin_names, "Names of the built-in experiments.");
  m.def(
      "builtin_config", [](const std::string& name) { return to_json(builtin_config(name)).dump(); }, py::arg("name"),
      "Built-in experiment config as JSON text.");
  m.def(
      "normalize_config", [](const std::string& config_json) { return to_json(parse_config(config_json)).dump(); },
      py::arg("config_json"), "Validate a config and return its canonical JSON echo.");

  m.def("run", &run_py, py::arg("config_json"), py::arg("trace_path") = std::nullopt,
        "Run the sampler once; returns the per-iteration trace as arrays.");
  m.def("run_study", &study_py, py::arg("config_json"), py::arg("strategies"), py::arg("final_iteration") = false,
        py::arg("same_seed") = false, py::arg("threads") = 0u, py::arg("csv_path") = std::nullopt,
        "Run every strategy over config.replicates seeds.");

  m.def(
      "ess", [](const Vector& log_w) { return ess(log_w); }, py::arg("log_w"),
      "Effective sample size of unnormalized log weights.");
  m.def(
      "normalized_weights", [](const Vector& log_w) { return normalized_weights(log_w); }, py::arg("log_w"));
  m.def(
      "fit_gaussian",
      [](const Positions& samples) {
        const GaussianParams g = fit_gaussian(samples);
        return py::make_tuple(g.mean, g.cov);
      },
      py::arg("samples"), "Maximum-likelihood mean and covariance of the rows.");
  m.def(
      "fit_gmm",
      [](const Positions& samples, Eigen::Index num_components, std::uint64_t seed) {
        Rng rng(seed);
        const GmmParams g = fit_gmm(samples, num_components, rng);
        std::vector<Vector> means;
        std::vector<Matrix> covs;
        for (const auto& c : g.components) {
          means.push_back(c.mean);
          covs.push_back(c.cov);
        }
        return py::make_tuple(g.component_weights, means, covs);
      },
      py::arg("samples"), py::arg("num_components"), py::arg("seed") = 0,
      "EM fit of a full-covariance Gaussian mixture; returns (weights, means, covs).");
  m.def(
      "gaussian_conditional",
      [](const Vector& joint_mean, const Matrix& joint_cov, const Vector& x_curr) {
        const GaussianParams c = gaussian_conditional(JointBlocks::partition({joint_mean, joint_cov}), x_curr);
        return py::make_tuple(c.mean, c.cov);
      },
      py::arg("joint_mean"), py::arg("joint_cov"), py::arg("x_curr"),
      "Conditional of the first half of a joint Gaussian given the second half.");
}
