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

#include "fdiff/config.hpp"

#include "fdiff/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace fdiff {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "manifold.kind",          "manifold.dimension",

      "model.kind",             "model.center",
      "model.radius",           "model.max_radius",
      "model.sigma",            "model.truncation",
      "model.atoms",            "model.weights",
      "model.moments",          "model.mc_samples",

      "experiment.n_list",      "experiment.T",
      "experiment.r",           "experiment.epsilon0",
      "experiment.replications", "experiment.seed",
      "experiment.residual_steps", "experiment.grid_stride",

      "solver.tol",             "solver.max_iter",

      "tests.covariance_rel_tol", "tests.condcov_rel_tol",
      "tests.mean_standard_errors", "tests.alpha",
      "tests.permutations",     "tests.stopped_fraction_limit",
      "tests.trend_reduction",  "tests.exact_zero_floor",
      "tests.scaling_separation", "tests.residual_reduction",

      "output.directory",
  };
  return keys;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())) != 0) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())) != 0) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
};

class Reader {
 public:
  Reader(std::string source, std::map<std::string, Entry> entries)
      : source_{std::move(source)}, entries_{std::move(entries)} {}

  [[noreturn]] void fail(const std::string& key, const std::string& reason) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
      throw ConfigError(fmt::format("{}: {}: {}", source_, key, reason));
    }
    throw ConfigError(fmt::format("{}:{}: {}: {}", source_, it->second.line, key, reason));
  }

  [[nodiscard]] bool has(const std::string& key) const { return entries_.contains(key); }

  [[nodiscard]] const std::string& raw(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
      fail(key, "required field is missing");
    }
    return it->second.value;
  }

  [[nodiscard]] double real(const std::string& key, std::string_view text) const {
    double v = 0.0;
    const std::string s(trim(text));
    std::size_t used = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      fail(key, fmt::format("'{}' is not a real number", s));
    }
    if (used != s.size()) {
      fail(key, fmt::format("'{}' is not a real number", s));
    }
    return v;
  }

  [[nodiscard]] double real(const std::string& key) const { return real(key, raw(key)); }

  template <class Int>
  [[nodiscard]] Int integer(const std::string& key, std::string_view text) const {
    Int v{};
    const std::string_view s = trim(text);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
      fail(key, fmt::format("'{}' is not an integer", s));
    }
    return v;
  }

  template <class Int>
  [[nodiscard]] Int integer(const std::string& key) const {
    return integer<Int>(key, raw(key));
  }

  [[nodiscard]] std::vector<double> reals(const std::string& key, std::string_view text) const {
    std::vector<double> out;
    for (const auto part : split(text, ',')) {
      out.push_back(real(key, part));
    }
    return out;
  }

  [[nodiscard]] std::vector<int> integers(const std::string& key) const {
    std::vector<int> out;
    for (const auto part : split(raw(key), ',')) {
      out.push_back(integer<int>(key, part));
    }
    return out;
  }

  [[nodiscard]] int line(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  [[nodiscard]] const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
};

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void validate(const ExperimentConfig& c, const Reader& in) {
  if (c.dimension < 1) {
    in.fail("manifold.dimension", "must be >= 1");
  }
  if (c.n_list.empty()) {
    in.fail("experiment.n_list", "must list at least one n");
  }
  for (std::size_t i = 0; i < c.n_list.size(); ++i) {
    if (c.n_list[i] < 1) {
      in.fail("experiment.n_list", "every n must be >= 1");
    }
    if (i > 0 && c.n_list[i] <= c.n_list[i - 1]) {
      in.fail("experiment.n_list", "values must be strictly ascending");
    }
  }
  if (!(c.horizon > 0.0)) {
    in.fail("experiment.T", "must be > 0");
  }
  if (!(c.stop_radius > 0.0)) {
    in.fail("experiment.r", "must be > 0");
  }
  if (!(c.epsilon0 > 0.0 && c.epsilon0 < c.horizon)) {
    in.fail("experiment.epsilon0", "must satisfy 0 < epsilon0 < T");
  }
  if (c.replications < 1) {
    in.fail("experiment.replications", "must be >= 1");
  }
  if (c.mc_samples < 1) {
    in.fail("model.mc_samples", "must be >= 1");
  }
  if (c.grid_stride < 0) {
    in.fail("experiment.grid_stride", "must be >= 0");
  }
  for (const int k : c.residual_steps) {
    if (k < 1) {
      in.fail("experiment.residual_steps", "steps must be >= 1");
    }
  }
  if (!(c.solver.tol > 0.0) || c.solver.max_iter < 1) {
    in.fail(c.solver.max_iter < 1 ? "solver.max_iter" : "solver.tol", "solver needs tol > 0 and max_iter >= 1");
  }
  const Thresholds& t = c.thresholds;
  if (!(t.alpha > 0.0 && t.alpha < 1.0)) {
    in.fail("tests.alpha", "must lie in (0, 1)");
  }
  if (t.permutations < 1) {
    in.fail("tests.permutations", "must be >= 1");
  }
}

}  // namespace

std::string ExperimentConfig::where(const std::string& key) const {
  const auto it = lines.find(key);
  return it == lines.end() ? source : fmt::format("{}:{}", source, it->second);
}

ExperimentConfig parse_config(std::string_view text, std::string source) {
  std::map<std::string, Entry> entries;
  std::string section;
  std::istringstream stream{std::string(text)};
  std::string line_text;
  int line_no = 0;
  while (std::getline(stream, line_text)) {
    ++line_no;
    std::string_view line = line_text;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty() || line.front() == ';') {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(fmt::format("{}:{}: malformed section header '{}'", source, line_no, line));
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("{}:{}: expected 'key = value', got '{}'", source, line_no, line));
    }
    if (section.empty()) {
      throw ConfigError(fmt::format("{}:{}: key outside of any [section]", source, line_no));
    }
    const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
    if (!known_keys().contains(key)) {
      throw ConfigError(fmt::format("{}:{}: unknown field '{}'", source, line_no, key));
    }
    if (entries.contains(key)) {
      throw ConfigError(fmt::format("{}:{}: field '{}' already set on line {}", source, line_no, key, entries[key].line));
    }
    entries[key] = Entry{std::string(trim(line.substr(eq + 1))), line_no};
  }

  const Reader in(source, std::move(entries));
  ExperimentConfig c;
  c.source = source;
  for (const auto& [key, entry] : in.entries()) {
    c.lines[key] = entry.line;
  }

  try {
    c.manifold_kind = manifold_kind_from_string(in.raw("manifold.kind"));
  } catch (const InvalidInputError& e) {
    in.fail("manifold.kind", e.what());
  }
  c.dimension = in.integer<int>("manifold.dimension");

  ModelConfig& m = c.model;
  m.kind = in.raw("model.kind");
  if (in.has("model.center")) {
    m.center = to_vector(in.reals("model.center", in.raw("model.center")));
  }
  if (m.kind == "uniform_circle") {
    m.radius = in.real("model.radius");
  } else if (m.kind == "ball_uniform") {
    m.max_radius = in.real("model.max_radius");
  } else if (m.kind == "gaussian") {
    m.sigma = in.real("model.sigma");
    m.truncation = in.real("model.truncation");
  } else if (m.kind == "discrete") {
    for (const auto atom : split(in.raw("model.atoms"), ';')) {
      m.atoms.push_back(to_vector(in.reals("model.atoms", atom)));
    }
    if (in.has("model.weights")) {
      m.weights = in.reals("model.weights", in.raw("model.weights"));
    } else {
      m.weights.assign(m.atoms.size(), 1.0 / static_cast<double>(m.atoms.size()));
    }
  } else {
    in.fail("model.kind", fmt::format("unsupported model kind '{}' (expected uniform_circle, ball_uniform, "
                                      "gaussian or discrete)",
                                      m.kind));
  }
  if (in.has("model.moments")) {
    try {
      c.moments = moment_source_from_string(in.raw("model.moments"));
    } catch (const InvalidInputError& e) {
      in.fail("model.moments", e.what());
    }
  }
  if (in.has("model.mc_samples")) {
    c.mc_samples = in.integer<int>("model.mc_samples");
  }

  c.n_list = in.integers("experiment.n_list");
  c.horizon = in.real("experiment.T");
  if (in.has("experiment.r")) {
    c.stop_radius = in.real("experiment.r");
  }
  c.epsilon0 = in.has("experiment.epsilon0") ? in.real("experiment.epsilon0") : 0.05 * c.horizon;
  c.replications = in.integer<int>("experiment.replications");
  c.seed = in.integer<std::uint64_t>("experiment.seed");
  if (in.has("experiment.residual_steps")) {
    c.residual_steps = in.integers("experiment.residual_steps");
  }
  if (in.has("experiment.grid_stride")) {
    c.grid_stride = in.integer<int>("experiment.grid_stride");
  }

  if (in.has("solver.tol")) {
    c.solver.tol = in.real("solver.tol");
  }
  if (in.has("solver.max_iter")) {
    c.solver.max_iter = in.integer<int>("solver.max_iter");
  }

  Thresholds& t = c.thresholds;
  const auto opt_real = [&](const std::string& key, double& field) {
    if (in.has(key)) {
      field = in.real(key);
    }
  };
  opt_real("tests.covariance_rel_tol", t.covariance_rel_tol);
  opt_real("tests.condcov_rel_tol", t.condcov_rel_tol);
  opt_real("tests.mean_standard_errors", t.mean_standard_errors);
  opt_real("tests.alpha", t.alpha);
  opt_real("tests.stopped_fraction_limit", t.stopped_fraction_limit);
  opt_real("tests.trend_reduction", t.trend_reduction);
  opt_real("tests.exact_zero_floor", t.exact_zero_floor);
  opt_real("tests.scaling_separation", t.scaling_separation);
  opt_real("tests.residual_reduction", t.residual_reduction);
  if (in.has("tests.permutations")) {
    t.permutations = in.integer<int>("tests.permutations");
  }
  if (in.has("output.directory")) {
    c.output_dir = in.raw("output.directory");
  }

  validate(c, in);

  // Building the model checks the support and weight invariants.
  try {
    (void)build_model(c);
  } catch (const ConfigError& e) {
    const std::string key = in.has("model.radius")       ? "model.radius"
                            : in.has("model.max_radius") ? "model.max_radius"
                            : in.has("model.truncation") ? "model.truncation"
                            : in.has("model.atoms")      ? "model.atoms"
                                                         : "model.kind";
    in.fail(key, e.what());
  } catch (const InvalidInputError& e) {
    in.fail("model.center", e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) {
    throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  }
  std::stringstream buffer;
  buffer << file.rdbuf();
  return parse_config(buffer.str(), path.filename().string());
}

PopulationModel build_model(const ExperimentConfig& config) {
  const Manifold m = config.manifold();
  ManifoldPoint center;
  if (config.model.center.size() == 0) {
    center.coords = Eigen::VectorXd::Zero(m.ambient_dim());
    if (m.kind() != ManifoldKind::kEuclidean) {
      center.coords[m.dim()] = 1.0;
    }
  } else {
    if (config.model.center.size() != m.ambient_dim()) {
      throw ConfigError(fmt::format("center has {} coordinates, {} needs {}", config.model.center.size(), m.name(),
                                    m.ambient_dim()));
    }
    center.coords = config.model.center;
  }
  // Hand-written coordinates are snapped onto the manifold when they are close.
  const auto snap = [&](const Eigen::VectorXd& v, const std::string& what) {
    if (v.size() != m.ambient_dim()) {
      throw ConfigError(fmt::format("{} has {} coordinates, {} needs {}", what, v.size(), m.name(), m.ambient_dim()));
    }
    if (!m.contains(ManifoldPoint{v}, 1e-6)) {
      throw ConfigError(fmt::format("{} is not a point of {}", what, m.name()));
    }
    return m.project(v);
  };
  center = snap(center.coords, "center");

  const ModelConfig& mc = config.model;
  if (mc.kind == "uniform_circle") {
    return {m, center, UniformCircleSpec{mc.radius}};
  }
  if (mc.kind == "ball_uniform") {
    return {m, center, BallUniformSpec{mc.max_radius}};
  }
  if (mc.kind == "gaussian") {
    return {m, center, GaussianPushforwardSpec{mc.sigma, mc.truncation}};
  }
  if (mc.kind == "discrete") {
    DiscreteSpec spec;
    for (std::size_t i = 0; i < mc.atoms.size(); ++i) {
      spec.atoms.push_back(snap(mc.atoms[i], fmt::format("atom {}", i)));
    }
    spec.weights = mc.weights;
    return {m, center, std::move(spec)};
  }
  throw ConfigError(fmt::format("unsupported model kind '{}'", mc.kind));
}

}  // namespace fdiff
