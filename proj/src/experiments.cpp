#include "smc_optl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace smc_optl {

namespace {

using nlohmann::json;

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sanitize_field(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

json vector_json(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    rows.push_back(vector_json(m.row(r).transpose()));
  }
  return rows;
}

Vector vector_from(const json& j, const char* what) {
  if (!j.is_array()) {
    throw ConfigError(std::string(what) + " must be an array of numbers");
  }
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Matrix matrix_from(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw ConfigError(std::string(what) + " must be a row-major nested array");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(std::string(what) + " rows have unequal lengths");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

json gaussian_json(const GaussianParams& g) { return {{"mean", vector_json(g.mean)}, {"cov", matrix_json(g.cov)}}; }

GaussianParams gaussian_from(const json& j, const char* what) {
  if (!j.contains("mean") || !j.contains("cov")) {
    throw ConfigError(std::string(what) + " needs 'mean' and 'cov'");
  }
  return {vector_from(j.at("mean"), what), matrix_from(j.at("cov"), what)};
}

ExperimentConfig two_d_toy() {
  ExperimentConfig c;
  c.name = "2d_toy";
  c.target.density = GaussianParams{Vector{{3.0, 2.0}}, Matrix::Identity(2, 2)};
  c.proposal.initial = GaussianParams{Vector::Zero(2), Matrix::Identity(2, 2)};
  c.proposal.random_walk_cov = Matrix::Identity(2, 2);
  c.num_particles = 500;
  c.num_iterations = 100;
  return c;
}

ExperimentConfig bimodal() {
  ExperimentConfig c;
  c.name = "bimodal";
  GmmParams target;
  target.component_weights = Vector{{0.5, 0.5}};
  target.components = {GaussianParams{Vector{{-3.0}}, Matrix{{1.0}}}, GaussianParams{Vector{{3.0}}, Matrix{{1.0}}}};
  c.target.density = target;
  c.proposal.initial = GaussianParams{Vector{{0.0}}, Matrix{{3.0}}};
  c.proposal.random_walk_cov = Matrix{{0.1}};
  c.num_particles = 500;
  c.num_iterations = 1000;
  c.notes.push_back("initial proposal N(0, 3) is read as variance 3, matching the sigma^2 convention of the target");
  return c;
}

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"2d_toy", "bimodal"};
  return names;
}

ExperimentConfig builtin_config(const std::string& name) {
  if (name == "2d_toy") {
    return two_d_toy();
  }
  if (name == "bimodal") {
    return bimodal();
  }
  throw ConfigError("unknown experiment '" + name + "' (valid: 2d_toy, bimodal)");
}

std::vector<LKernelStrategy> default_strategies(const std::string& name) {
  if (name == "bimodal") {
    return {LKernelStrategy::forward_proposal(), LKernelStrategy::gmm_opt(1), LKernelStrategy::gmm_opt(2)};
  }
  return {LKernelStrategy::forward_proposal(), LKernelStrategy::gaussian_opt()};
}

std::vector<std::string> moment_names(Eigen::Index dim) {
  std::vector<std::string> names;
  for (Eigen::Index i = 0; i < dim; ++i) {
    names.push_back("mean_" + std::to_string(i));
  }
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = i; j < dim; ++j) {
      names.push_back("cov_" + std::to_string(i) + std::to_string(j));
    }
  }
  return names;
}

Vector moment_vector(const Vector& mean, const Matrix& cov) {
  const Eigen::Index d = mean.size();
  Vector out(d + d * (d + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    out[k++] = mean[i];
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      out[k++] = cov(i, j);
    }
  }
  return out;
}

Vector column_sample_variance(const Matrix& observations) {
  const Eigen::Index r = observations.rows();
  if (r < 2) {
    return Vector::Constant(observations.cols(), std::numeric_limits<double>::quiet_NaN());
  }
  const Vector mean = observations.colwise().mean().transpose();
  const Matrix centered = observations.rowwise() - mean.transpose();
  return centered.colwise().squaredNorm().transpose() / static_cast<double>(r - 1);
}

StudyReport run_study(const ExperimentConfig& config, const std::vector<LKernelStrategy>& strategies,
                      const StudyOptions& options) {
  config.validate();
  StudyReport report;
  report.experiment = config.name;
  report.dim = config.dim();
  report.moment_names = moment_names(report.dim);

  const auto replicates = static_cast<std::size_t>(config.replicates);
  report.strategies.resize(strategies.size());
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    report.strategies[s].strategy = strategies[s];
    report.strategies[s].replicates.resize(replicates);
  }

  const std::size_t total = strategies.size() * replicates;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task = next++; task < total; task = next++) {
      const std::size_t s = task / replicates;
      const std::size_t r = task % replicates;
      ReplicateResult& out = report.strategies[s].replicates[r];
      ExperimentConfig cfg = config;
      cfg.strategy = strategies[s];
      cfg.seed = options.same_seed ? config.seed : config.seed + r;
      out.replicate = static_cast<int>(r);
      out.seed = cfg.seed;
      try {
        RunRecord rec = run(cfg);
        const auto& last = rec.final();
        out.resample_count = rec.resample_count();
        out.recycling = rec.recycling;
        out.moments = options.final_iteration ? moment_vector(last.mean, last.cov)
                                              : moment_vector(last.recycled_mean, last.recycled_cov);
        if (options.keep_traces) {
          out.record = std::move(rec);
        }
      } catch (const RunAbortedError& e) {
        out.error = e.what();
        out.resample_count = e.partial().resample_count();
        out.moments = Vector::Constant(static_cast<Eigen::Index>(report.moment_names.size()),
                                       std::numeric_limits<double>::quiet_NaN());
      }
    }
  };

  unsigned threads = options.threads != 0 ? options.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(total, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
  }

  const auto entries = static_cast<Eigen::Index>(report.moment_names.size());
  for (auto& sr : report.strategies) {
    std::vector<const ReplicateResult*> good;
    for (const auto& r : sr.replicates) {
      if (r.ok()) {
        good.push_back(&r);
      }
    }
    Matrix obs(static_cast<Eigen::Index>(good.size()), entries);
    for (std::size_t i = 0; i < good.size(); ++i) {
      obs.row(static_cast<Eigen::Index>(i)) = good[i]->moments.transpose();
    }
    sr.variance = column_sample_variance(obs);
  }
  return report;
}

void write_trace_csv(const RunRecord& record, std::ostream& out) {
  const Eigen::Index d = record.dim;
  out << "iteration,ess,resampled";
  for (const char* prefix : {"mean_", "cov_", "recycled_mean_", "recycled_cov_"}) {
    const bool is_cov = std::string_view(prefix).ends_with("cov_");
    for (Eigen::Index i = 0; i < d; ++i) {
      if (is_cov) {
        for (Eigen::Index j = 0; j < d; ++j) {
          out << ',' << prefix << i << j;
        }
      } else {
        out << ',' << prefix << i;
      }
    }
  }
  out << '\n';
  for (const auto& it : record.iterations) {
    out << it.iteration << ',' << format_real(it.ess) << ',' << (it.resampled ? 1 : 0);
    for (Eigen::Index i = 0; i < d; ++i) {
      out << ',' << format_real(it.mean[i]);
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        out << ',' << format_real(it.cov(i, j));
      }
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      out << ',' << format_real(it.recycled_mean[i]);
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        out << ',' << format_real(it.recycled_cov(i, j));
      }
    }
    out << '\n';
  }
}

void write_study_csv(const StudyReport& report, std::ostream& out) {
  out << "strategy,replicate,seed,resample_count";
  for (const auto& name : report.moment_names) {
    out << ",final_" << name;
  }
  out << ",status\n";
  for (const auto& sr : report.strategies) {
    const std::string name = sr.strategy.name();
    for (const auto& r : sr.replicates) {
      out << name << ',' << r.replicate << ',' << r.seed << ',' << r.resample_count;
      for (Eigen::Index k = 0; k < r.moments.size(); ++k) {
        out << ',' << format_real(r.moments[k]);
      }
      out << ',' << (r.ok() ? std::string("ok") : sanitize_field(r.error)) << '\n';
    }
  }
  // Summary block: one row per strategy, moment columns hold the across-replicate variance.
  for (const auto& sr : report.strategies) {
    out << sr.strategy.name() << ",variance,,";
    for (Eigen::Index k = 0; k < sr.variance.size(); ++k) {
      out << ',' << format_real(sr.variance[k]);
    }
    out << ",summary\n";
  }
}

namespace {

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  writer(file);
  file.flush();
  if (!file) {
    throw IoError("failed writing '" + path.string() + "'");
  }
}

}  // namespace

void emit_csv(const RunRecord& record, const std::filesystem::path& path) {
  write_file(path, [&](std::ostream& out) { write_trace_csv(record, out); });
}

void emit_csv(const StudyReport& report, const std::filesystem::path& path) {
  write_file(path, [&](std::ostream& out) { write_study_csv(report, out); });
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw IoError("CSV has no column named '" + name + "'");
  }
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
      fields.emplace_back();
    }
    return fields;
  };
  CsvTable table;
  std::string line;
  if (std::getline(in, line)) {
    table.header = split(line);
  }
  while (std::getline(in, line)) {
    if (!line.empty()) {
      table.rows.push_back(split(line));
    }
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  return read_csv(file);
}

json to_json(const ExperimentConfig& config) {
  json target;
  if (const auto* g = std::get_if<GaussianParams>(&config.target.density)) {
    target = {{"type", "gaussian"}, {"mean", vector_json(g->mean)}, {"cov", matrix_json(g->cov)}};
  } else {
    const auto& gmm = std::get<GmmParams>(config.target.density);
    json means = json::array();
    json covs = json::array();
    for (const auto& c : gmm.components) {
      means.push_back(vector_json(c.mean));
      covs.push_back(matrix_json(c.cov));
    }
    target = {{"type", "gmm"}, {"weights", vector_json(gmm.component_weights)}, {"means", means}, {"covs", covs}};
  }
  const GaussianParams truth = config.target.moments();
  return {
      {"name", config.name},
      {"target", target},
      {"target_moments", gaussian_json(truth)},
      {"proposal",
       {{"initial", gaussian_json(config.proposal.initial)},
        {"random_walk_cov", matrix_json(config.proposal.random_walk_cov)}}},
      {"N", config.num_particles},
      {"K", config.num_iterations},
      {"ess_threshold_ratio", config.ess_threshold_ratio},
      {"strategy", config.strategy.name()},
      {"seed", config.seed},
      {"replicates", config.replicates},
      {"resampling", to_string(config.resampling)},
      {"notes", config.notes},
  };
}

ExperimentConfig config_from_json(const json& j) {
  try {
    ExperimentConfig c;
    c.name = j.value("name", std::string("custom"));
    const json& t = j.at("target");
    const std::string type = t.value("type", std::string("gaussian"));
    if (type == "gaussian") {
      c.target.density = gaussian_from(t, "target");
    } else if (type == "gmm") {
      GmmParams gmm;
      gmm.component_weights = vector_from(t.at("weights"), "target.weights");
      const json& means = t.at("means");
      const json& covs = t.at("covs");
      if (means.size() != covs.size()) {
        throw ConfigError("target.means and target.covs differ in length");
      }
      for (std::size_t m = 0; m < means.size(); ++m) {
        gmm.components.push_back({vector_from(means[m], "target.means"), matrix_from(covs[m], "target.covs")});
      }
      c.target.density = gmm;
    } else {
      throw ConfigError("target.type must be 'gaussian' or 'gmm', got '" + type + "'");
    }
    const json& p = j.at("proposal");
    c.proposal.initial = gaussian_from(p.at("initial"), "proposal.initial");
    c.proposal.random_walk_cov = matrix_from(p.at("random_walk_cov"), "proposal.random_walk_cov");
    c.num_particles = j.value("N", c.num_particles);
    c.num_iterations = j.value("K", c.num_iterations);
    c.ess_threshold_ratio = j.value("ess_threshold_ratio", c.ess_threshold_ratio);
    c.strategy = LKernelStrategy::parse(j.value("strategy", std::string("forward")));
    c.seed = j.value("seed", c.seed);
    c.replicates = j.value("replicates", c.replicates);
    c.resampling = parse_resampling_scheme(j.value("resampling", std::string("multinomial")));
    c.notes = j.value("notes", std::vector<std::string>{});
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config JSON: ") + e.what());
  } catch (const InvalidArgumentError& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) {
    throw IoError("cannot open config '" + path.string() + "'");
  }
  try {
    return config_from_json(json::parse(file));
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse config '" + path.string() + "': " + e.what());
  }
}

}  // namespace smc_optl
