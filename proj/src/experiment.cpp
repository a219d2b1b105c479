// Copyright 2026 The fdiff Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fdiff/experiment.hpp"

#include "fdiff/chains.hpp"
#include "fdiff/sampling.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

namespace fdiff {

using nlohmann::json;

ReplicationFailure::ReplicationFailure(int n_, int replication_, std::uint64_t seed_, const std::string& what)
    : NumericalFailure(fmt::format("replication {} of n = {} (seed {}) failed: {}", replication_, n_, seed_, what)),
      n{n_},
      replication{replication_},
      seed{seed_} {}

bool RunSummary::all_passed() const {
  return std::none_of(reports.begin(), reports.end(),
                      [](const TestReport& r) { return r.status == TestStatus::kFail; });
}

const TestReport* RunSummary::find(const std::string& id) const {
  const auto it = std::find_if(reports.begin(), reports.end(), [&](const TestReport& r) { return r.id == id; });
  return it == reports.end() ? nullptr : &*it;
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config, const RunOptions& options) {
  if (options.out_dir) {
    return *options.out_dir;
  }
  if (!config.output_dir.empty()) {
    return config.output_dir;
  }
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    return env;
  }
  return "fdiff_out";
}

LimitParams limit_params_for(const ExperimentConfig& config) {
  const PopulationModel model = build_model(config);
  const Manifold& m = model.manifold();
  const ManifoldPoint mu = model.is_symmetric() ? model.center() : population_moments(model).mu;
  const OrthonormalFrame frame = m.frame(mu);
  return estimate_limit_params(model, mu, frame, config.mc_samples,
                               RngStream{config.seed, 0, StreamPurpose::kMoments}, config.moments);
}

namespace {

std::uint64_t replication_key(int n, int rep) {
  return (static_cast<std::uint64_t>(n) << 32) | static_cast<std::uint64_t>(rep);
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
  }
  return out;
}

json report_json(const TestReport& r) {
  json details = json::object();
  for (const auto& [name, value] : r.details) {
    details[name] = value;
  }
  return {{"id", r.id},
          {"status", std::string(to_string(r.status))},
          {"statistic", r.statistic},
          {"threshold", r.threshold},
          {"replications", r.replications},
          {"metadata",
           {{"n", r.metadata.n},
            {"T", r.metadata.horizon},
            {"model", r.metadata.model_id},
            {"seed", r.metadata.seed}}},
          {"details", details},
          {"note", r.note}};
}

json config_json(const ExperimentConfig& c) {
  json model = {{"kind", c.model.kind},
                {"center", vector_json(c.model.center)},
                {"moments", std::string(to_string(c.moments))},
                {"mc_samples", c.mc_samples}};
  if (c.model.kind == "uniform_circle") {
    model["radius"] = c.model.radius;
  } else if (c.model.kind == "ball_uniform") {
    model["max_radius"] = c.model.max_radius;
  } else if (c.model.kind == "gaussian") {
    model["sigma"] = c.model.sigma;
    model["truncation"] = c.model.truncation;
  } else {
    json atoms = json::array();
    for (const auto& a : c.model.atoms) {
      atoms.push_back(vector_json(a));
    }
    model["atoms"] = atoms;
    model["weights"] = c.model.weights;
  }
  const Thresholds& t = c.thresholds;
  return {{"source", c.source},
          {"manifold", {{"kind", std::string(to_string(c.manifold_kind))}, {"dimension", c.dimension}}},
          {"model", model},
          {"experiment",
           {{"n_list", c.n_list},
            {"T", c.horizon},
            {"r", c.stop_radius},
            {"epsilon0", c.epsilon0},
            {"replications", c.replications},
            {"seed", c.seed},
            {"residual_steps", c.residual_steps},
            {"grid_stride", c.grid_stride}}},
          {"solver", {{"tol", c.solver.tol}, {"max_iter", c.solver.max_iter}}},
          {"tests",
           {{"covariance_rel_tol", t.covariance_rel_tol},
            {"condcov_rel_tol", t.condcov_rel_tol},
            {"mean_standard_errors", t.mean_standard_errors},
            {"alpha", t.alpha},
            {"permutations", t.permutations},
            {"stopped_fraction_limit", t.stopped_fraction_limit},
            {"trend_reduction", t.trend_reduction},
            {"exact_zero_floor", t.exact_zero_floor},
            {"scaling_separation", t.scaling_separation},
            {"residual_reduction", t.residual_reduction}}}};
}

TestReport inconclusive(std::string id, int replications, std::string note) {
  TestReport r;
  r.id = std::move(id);
  r.status = TestStatus::kInconclusive;
  r.replications = replications;
  r.note = std::move(note);
  return r;
}

Eigen::MatrixXd columns(const std::vector<Eigen::VectorXd>& vs, int d) {
  Eigen::MatrixXd out(d, static_cast<Eigen::Index>(vs.size()));
  for (std::size_t j = 0; j < vs.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = vs[j];
  }
  return out;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(fmt::format("cannot write '{}'", path.string()));
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

struct Job {
  std::size_t n_index;
  int rep;
};

struct JobError {
  std::size_t n_index;
  int rep;
  std::string message;
};

// Runs every (n, replication) pair; results land by index so the outcome is worker-count free.
std::vector<std::vector<PathRecord>> simulate(const ExperimentConfig& c, const PopulationModel& model,
                                              const LimitParams& params, int workers) {
  std::vector<std::vector<PathRecord>> results(c.n_list.size());
  std::vector<Job> jobs;
  for (std::size_t i = c.n_list.size(); i-- > 0;) {
    results[i].resize(static_cast<std::size_t>(c.replications));
    for (int rep = 0; rep < c.replications; ++rep) {
      jobs.push_back({i, rep});
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::vector<JobError> errors;
  const auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) {
        return;
      }
      const Job job = jobs[j];
      const int n = c.n_list[job.n_index];
      const int steps = horizon_steps(n, c.horizon);
      CoupledRunOptions opts;
      opts.solver = c.solver;
      opts.grid_stride = c.grid_stride;
      opts.marginal_steps = {std::max(1, static_cast<int>(std::floor(c.epsilon0 * n + 1e-9))), steps};
      for (const int k : c.residual_steps) {
        if (k <= steps) {
          opts.residual_steps.push_back(k);
        }
      }
      try {
        results[job.n_index][static_cast<std::size_t>(job.rep)] =
            run_coupled(model, params, n, c.horizon, c.stop_radius,
                        RngStream{c.seed, replication_key(n, job.rep), StreamPurpose::kData}, opts);
      } catch (const std::exception& e) {
        const std::lock_guard lock(error_mutex);
        errors.push_back({job.n_index, job.rep, e.what()});
        next.store(jobs.size());
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) {
    pool.emplace_back(worker);
  }
  worker();
  for (auto& t : pool) {
    t.join();
  }
  if (!errors.empty()) {
    const auto first = std::min_element(errors.begin(), errors.end(), [](const JobError& a, const JobError& b) {
      return std::tie(a.n_index, a.rep) < std::tie(b.n_index, b.rep);
    });
    throw ReplicationFailure(c.n_list[first->n_index], first->rep, c.seed, first->message);
  }
  return results;
}

std::string paths_csv(const std::vector<PathRecord>& records, int d, int& rows) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "replication,t");
  for (int i = 1; i <= d; ++i) {
    fmt::format_to(std::back_inserter(buf), ",V_{}", i);
  }
  for (int i = 1; i <= d; ++i) {
    fmt::format_to(std::back_inserter(buf), ",W_{}", i);
  }
  fmt::format_to(std::back_inserter(buf), ",stopped\n");
  rows = 0;
  for (std::size_t rep = 0; rep < records.size(); ++rep) {
    const PathRecord& rec = records[rep];
    const int stopped = rec.stopped_at ? 1 : 0;
    for (std::size_t g = 0; g < rec.grid_steps.size(); ++g) {
      fmt::format_to(std::back_inserter(buf), "{},{}", rep, num(rec.time_at(g)));
      for (int i = 0; i < d; ++i) {
        fmt::format_to(std::back_inserter(buf), ",{}", num(rec.v_path[g][i]));
      }
      for (int i = 0; i < d; ++i) {
        fmt::format_to(std::back_inserter(buf), ",{}", num(rec.w_path[g][i]));
      }
      fmt::format_to(std::back_inserter(buf), ",{}\n", stopped);
      ++rows;
    }
  }
  return fmt::to_string(buf);
}

// Reports that only involve the replications of a single n.
void per_n_reports(const ExperimentConfig& c, const LimitParams& params, int n,
                   const std::vector<PathRecord>& records, std::vector<TestReport>& out) {
  const int d = c.dimension;
  const Thresholds& th = c.thresholds;
  const Eigen::MatrixXd& a = params.a.entries;
  const int steps = horizon_steps(n, c.horizon);
  const int k0 = records.front().marginal_steps.front();

  std::vector<Eigen::VectorXd> w_final;
  std::vector<Eigen::VectorXd> w_eps;
  for (const auto& rec : records) {
    if (!rec.stopped_at) {
      w_eps.push_back(rec.w_marginals.front());
      w_final.push_back(rec.w_marginals.back());
    }
  }
  const int kept = static_cast<int>(w_final.size());
  const double t_final = static_cast<double>(steps) / n;
  const double t_eps = static_cast<double>(k0) / n;

  const std::string few = fmt::format("fewer than {} unstopped replications", kMinCovarianceSamples);
  if (kept >= kMinCovarianceSamples) {
    out.push_back(covariance_match(columns(w_final, d), t_final * a, th.covariance_rel_tol,
                                   fmt::format("marginal_covariance_n{}", n)));
    out.push_back(
        covariance_match(columns(w_eps, d), t_eps * a, th.covariance_rel_tol, fmt::format("eps0_covariance_n{}", n)));
  } else {
    out.push_back(inconclusive(fmt::format("marginal_covariance_n{}", n), kept, few));
    out.push_back(inconclusive(fmt::format("eps0_covariance_n{}", n), kept, few));
  }

  const std::string sq_id = fmt::format("eps0_squared_rejected_n{}", n);
  if (kept < kMinCovarianceSamples) {
    out.push_back(inconclusive(sq_id, kept, few));
  } else if (a.norm() == 0.0) {
    out.push_back(inconclusive(sq_id, kept, "A = 0 makes both scalings coincide"));
  } else if (1.0 / t_eps - 1.0 < 2.0 * th.scaling_separation) {
    out.push_back(inconclusive(sq_id, kept, "epsilon0 too large to separate epsilon0 A from epsilon0^2 A"));
  } else {
    const Eigen::MatrixXd s = empirical_covariance(columns(w_eps, d));
    const Eigen::MatrixXd wrong = t_eps * t_eps * a;
    TestReport r;
    r.id = sq_id;
    r.replications = kept;
    r.statistic = (s - wrong).norm() / wrong.norm();
    r.threshold = th.scaling_separation;
    r.status = r.statistic > r.threshold ? TestStatus::kPass : TestStatus::kFail;
    r.details = {{"epsilon0", t_eps}, {"empirical_trace", s.trace()}, {"squared_scaling_trace", wrong.trace()}};
    out.push_back(r);
  }

  const std::string g_id = fmt::format("gaussianity_n{}", n);
  if (kept >= kMinEnergySamples) {
    out.push_back(energy_gaussianity(columns(w_final, d), t_final * a, th.alpha,
                                     RngStream{c.seed, replication_key(n, 0), StreamPurpose::kReference},
                                     th.permutations, g_id));
  } else {
    out.push_back(inconclusive(g_id, kept, fmt::format("fewer than {} unstopped replications", kMinEnergySamples)));
  }

  std::vector<int> ks;
  for (const auto& [k, value] : records.front().residuals) {
    ks.push_back(k);
  }
  std::sort(ks.begin(), ks.end());
  if (ks.size() >= 2) {
    std::vector<double> first;
    std::vector<double> last;
    for (const auto& rec : records) {
      for (const auto& [k, value] : rec.residuals) {
        if (k == ks.front()) {
          first.push_back(value);
        } else if (k == ks.back()) {
          last.push_back(value);
        }
      }
    }
    TestReport r;
    r.id = fmt::format("linearization_residual_n{}", n);
    r.replications = static_cast<int>(last.size());
    r.threshold = th.residual_reduction;
    const double m_first = median(first);
    const double m_last = median(last);
    r.details = {{fmt::format("median_k{}", ks.front()), m_first}, {fmt::format("median_k{}", ks.back()), m_last}};
    if (m_first < th.exact_zero_floor) {
      r.statistic = m_first;
      r.threshold = th.exact_zero_floor;
      r.status = TestStatus::kPass;
      r.note = "residual below the exact-zero floor";
    } else {
      r.statistic = m_last > 0.0 ? m_first / m_last : std::numeric_limits<double>::infinity();
      r.status = r.statistic >= r.threshold ? TestStatus::kPass : TestStatus::kFail;
    }
    out.push_back(r);
  }
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  RunSummary summary;
  summary.config = config;
  if (options.seed_override) {
    summary.config.seed = *options.seed_override;
  }
  const ExperimentConfig& c = summary.config;
  const PopulationModel model = build_model(c);
  summary.params = limit_params_for(c);
  summary.out_dir = resolve_output_dir(c, options);
  std::filesystem::create_directories(summary.out_dir);

  int workers = options.workers > 0 ? options.workers : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, workers);
  const std::vector<std::vector<PathRecord>> results = simulate(c, model, summary.params, workers);

  const int d = c.dimension;
  const std::string model_id = model.id();
  std::vector<SupDiffGroup> groups;
  fmt::memory_buffer plot;
  fmt::format_to(std::back_inserter(plot), "n,median,q25,q75\n");
  json files = json::array();

  for (std::size_t i = 0; i < c.n_list.size(); ++i) {
    const int n = c.n_list[i];
    const auto& records = results[i];
    NStatistics stats;
    stats.n = n;
    stats.steps = horizon_steps(n, c.horizon);
    stats.replications = c.replications;
    SupDiffGroup group{n, {}, 0};
    for (const auto& rec : records) {
      group.sup_diffs.push_back(rec.sup_diff);
      group.stopped += rec.stopped_at ? 1 : 0;
      stats.max_solver_iterations = std::max(stats.max_solver_iterations, rec.max_solver_iterations);
    }
    stats.stopped = group.stopped;
    stats.sup_diff_median = median(group.sup_diffs);
    stats.sup_diff_q25 = quantile(group.sup_diffs, 0.25);
    stats.sup_diff_q75 = quantile(group.sup_diffs, 0.75);
    groups.push_back(group);

    const std::string name = fmt::format("paths_{}.csv", n);
    write_file(summary.out_dir / name, paths_csv(records, d, stats.csv_rows));
    files.push_back({{"file", name}, {"rows", stats.csv_rows}});
    fmt::format_to(std::back_inserter(plot), "{},{},{},{}\n", n, num(stats.sup_diff_median),
                   num(stats.sup_diff_q25), num(stats.sup_diff_q75));

    const std::size_t before = summary.reports.size();
    per_n_reports(c, summary.params, n, records, summary.reports);
    for (std::size_t j = before; j < summary.reports.size(); ++j) {
      summary.reports[j].metadata = {n, c.horizon, model_id, c.seed};
    }
    summary.per_n.push_back(stats);
  }

  if (groups.size() >= 2) {
    TestReport trend = c.replications >= kMinTrendReplications
                           ? sup_diff_trend(groups, c.thresholds)
                           : inconclusive("sup_diff_trend", c.replications,
                                          fmt::format("fewer than {} replications per n", kMinTrendReplications));
    trend.metadata = {c.n_list.back(), c.horizon, model_id, c.seed};
    summary.reports.push_back(trend);
  }

  write_file(summary.out_dir / "plotdata_supdiff.csv", fmt::to_string(plot));
  files.push_back({{"file", "plotdata_supdiff.csv"}, {"rows", static_cast<int>(c.n_list.size())}});

  json reports = json::array();
  for (const auto& r : summary.reports) {
    reports.push_back(report_json(r));
  }
  write_file(summary.out_dir / "reports.json", reports.dump(2) + "\n");
  files.push_back({{"file", "reports.json"}, {"rows", static_cast<int>(summary.reports.size())}});

  const LimitParams& p = summary.params;
  json per_n = json::array();
  for (const auto& s : summary.per_n) {
    json ids = json::array();
    for (const auto& r : summary.reports) {
      if (r.metadata.n == s.n && r.id != "sup_diff_trend") {
        ids.push_back({{"id", r.id}, {"status", std::string(to_string(r.status))}, {"statistic", r.statistic}});
      }
    }
    per_n.push_back({{"n", s.n},
                     {"steps", s.steps},
                     {"replications", s.replications},
                     {"stopped_fraction", static_cast<double>(s.stopped) / s.replications},
                     {"sup_diff", {{"median", s.sup_diff_median}, {"q25", s.sup_diff_q25}, {"q75", s.sup_diff_q75}}},
                     {"max_solver_iterations", s.max_solver_iterations},
                     {"reports", ids}});
  }
  const json doc = {{"version", kVersion},
                    {"config", config_json(c)},
                    {"limit_params",
                     {{"provenance", p.provenance},
                      {"mu", vector_json(p.frame().base.coords)},
                      {"frame", matrix_json(p.frame().basis)},
                      {"expected_hessian", matrix_json(p.expected_hessian.entries)},
                      {"gamma", matrix_json(p.gamma.entries)},
                      {"A", matrix_json(p.a.entries)},
                      {"sqrt_A", matrix_json(p.sqrt_a.entries)}}},
                    {"per_n", per_n},
                    {"files", files},
                    {"wall_clock_file", "timing.json"},
                    {"all_passed", summary.all_passed()}};
  write_file(summary.out_dir / "summary.json", doc.dump(2) + "\n");

  summary.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_file(summary.out_dir / "timing.json",
             json{{"wall_clock_seconds", summary.wall_clock_seconds}, {"workers", workers}}.dump(2) + "\n");
  return summary;
}

std::string describe_model(const ExperimentConfig& config) {
  const PopulationModel model = build_model(config);
  const LimitParams p = limit_params_for(config);
  std::string out = fmt::format("model       {}\nmanifold    {}\nprovenance  {}\n", model.id(),
                                model.manifold().name(), p.provenance);
  const auto vec = [](const Eigen::VectorXd& v) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      s += fmt::format("{}{:.9g}", i == 0 ? "" : ", ", v[i]);
    }
    return s + "]";
  };
  out += fmt::format("mu          {}\n", vec(p.frame().base.coords));
  const auto mat = [&](const char* name, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      out += fmt::format("{:<12}{}\n", i == 0 ? name : "", vec(m.row(i).transpose()));
    }
  };
  mat("E[H]", p.expected_hessian.entries);
  mat("Gamma", p.gamma.entries);
  mat("A", p.a.entries);
  mat("sqrt(A)", p.sqrt_a.entries);
  return out;
}

}  // namespace fdiff
