#include "lqgame/config.hpp"

#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "lqgame/errors.hpp"
#include "lqgame/linalg.hpp"

namespace lqgame::cli {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Reads keys out of one JSON object and remembers which ones were used, so
// leftovers can be reported as unknown.
class Block {
 public:
  Block(const json* node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ != nullptr && !node_->is_object()) throw ConfigError(path_, "expected an object");
  }

  [[nodiscard]] bool has(const std::string& key) const {
    return node_ != nullptr && node_->contains(key);
  }

  const json* child(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return nullptr;
    return &node_->at(key);
  }

  template <typename T>
  T get(const std::string& key, const T& fallback) {
    const json* v = child(key);
    if (v == nullptr) return fallback;
    return convert<T>(*v, join(path_, key));
  }

  template <typename T>
  T require(const std::string& key) {
    const json* v = child(key);
    if (v == nullptr) throw ConfigError(join(path_, key), "missing required field");
    return convert<T>(*v, join(path_, key));
  }

  Eigen::MatrixXd matrix(const std::string& key) {
    const json* v = child(key);
    if (v == nullptr) throw ConfigError(join(path_, key), "missing required field");
    return to_matrix(*v, join(path_, key));
  }

  std::optional<Eigen::MatrixXd> optional_matrix(const std::string& key) {
    const json* v = child(key);
    if (v == nullptr) return std::nullopt;
    return to_matrix(*v, join(path_, key));
  }

  void finish() const {
    if (node_ == nullptr) return;
    for (const auto& [key, value] : node_->items()) {
      if (!used_.contains(key)) throw ConfigError(join(path_, key), "unknown key");
    }
  }

  [[nodiscard]] const std::string& path() const { return path_; }

  static Eigen::MatrixXd to_matrix(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of rows");
    const auto rows = static_cast<Eigen::Index>(v.size());
    Eigen::Index cols = -1;
    for (const auto& row : v) {
      if (!row.is_array()) throw ConfigError(path, "expected an array of rows");
      if (cols < 0) cols = static_cast<Eigen::Index>(row.size());
      if (static_cast<Eigen::Index>(row.size()) != cols) throw ConfigError(path, "ragged rows");
    }
    Eigen::MatrixXd M(rows, std::max<Eigen::Index>(cols, 0));
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < M.cols(); ++j) {
        const json& e = v[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (!e.is_number()) throw ConfigError(path, "matrix entries must be numbers");
        M(i, j) = e.get<double>();
      }
    }
    return M;
  }

  template <typename T>
  static T convert(const json& v, const std::string& path) {
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!v.is_number()) throw ConfigError(path, "expected a number");
        if constexpr (std::is_integral_v<T>) {
          if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
          if constexpr (std::is_unsigned_v<T>) {
            if (v.is_number_integer() && !v.is_number_unsigned()) {
              throw ConfigError(path, "expected a non-negative integer");
            }
          }
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(path, "expected a string");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path, e.what());
    }
  }

 private:
  const json* node_;
  std::string path_;
  std::set<std::string> used_;
};

json matrix_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void expect_shape(const Eigen::MatrixXd& M, Eigen::Index rows, Eigen::Index cols,
                  const std::string& path) {
  if (M.rows() != rows || M.cols() != cols) {
    throw ConfigError(path, "expected a " + std::to_string(rows) + "x" + std::to_string(cols) +
                                " matrix, got " + std::to_string(M.rows()) + "x" +
                                std::to_string(M.cols()));
  }
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  Block root(&doc, "");
  ExperimentConfig c;

  {
    const json* node = root.child("model");
    if (node == nullptr) throw ConfigError("model", "missing required block");
    Block b(node, "model");
    c.model.A = b.matrix("A");
    c.model.B1 = b.matrix("B1");
    c.model.B2 = b.matrix("B2");
    c.model.D = b.matrix("D");
    c.model.Qw = b.matrix("Qw");
    c.model.R1 = b.matrix("R1");
    c.model.R2 = b.matrix("R2");
    b.finish();
    if (const auto problems = validate_model(c.model); !problems.empty()) {
      std::string all;
      for (const auto& p : problems) all += (all.empty() ? "" : "; ") + p;
      throw ConfigError("model", all);
    }
  }
  const ModelDims dims = c.model.dims();

  {
    Block b(root.child("sim"), "sim");
    c.sim.horizon = b.get<double>("T", c.sim.horizon);
    c.sim.step = b.get<double>("h", c.sim.step);
    c.sim.seed = b.get<std::uint64_t>("seed", c.sim.seed);
    c.sim.record_stride = b.get<int>("record_stride", c.sim.record_stride);
    const auto x0 = b.get<std::vector<double>>("x0", std::vector<double>(dims.n, 0.0));
    if (static_cast<int>(x0.size()) != dims.n) throw ConfigError("sim.x0", "expected n entries");
    c.sim.x0 = to_vector(x0);
    b.finish();
  }

  {
    Block b(root.child("estimator"), "estimator");
    auto& est = c.adaptive.estimator;
    est.cov0_scale = b.get<double>("cov0_scale", est.cov0_scale);
    est.f.delta = b.get<double>("delta", est.f.delta);
    est.gamma_reg = b.get<double>("gamma_reg", est.gamma_reg);
    const auto scheme = b.get<std::string>("scheme", to_string(est.scheme));
    if (scheme == "euler") {
      est.scheme = WlsScheme::Euler;
    } else if (scheme == "exact") {
      est.scheme = WlsScheme::Exact;
    } else {
      throw ConfigError("estimator.scheme", "expected \"euler\" or \"exact\"");
    }
    if (!(est.cov0_scale > 0.0)) throw ConfigError("estimator.cov0_scale", "must be positive");
    if (!(est.f.delta > 0.0)) throw ConfigError("estimator.delta", "must be positive");
    if (!(est.gamma_reg > 0.0 && est.gamma_reg < std::sqrt(2.0) - 1.0)) {
      throw ConfigError("estimator.gamma_reg", "must lie in (0, sqrt(2) - 1)");
    }
    if (const json* t = b.child("theta0")) {
      Block tb(t, "estimator.theta0");
      const Eigen::MatrixXd A0 = tb.matrix("A");
      const Eigen::MatrixXd B10 = tb.matrix("B1");
      const Eigen::MatrixXd B20 = tb.matrix("B2");
      tb.finish();
      expect_shape(A0, dims.n, dims.n, "estimator.theta0.A");
      expect_shape(B10, dims.n, dims.m1, "estimator.theta0.B1");
      expect_shape(B20, dims.n, dims.m2, "estimator.theta0.B2");
      Eigen::MatrixXd B0(dims.n, dims.input_size());
      B0 << B10, B20;
      if (!kalman_controllability(A0, B0).controllable) {
        throw ConfigError("estimator.theta0", "initial estimate must be a controllable pair");
      }
      est.theta0 = stack_theta(A0, B10, B20);
    } else {
      est.theta0 = default_theta0(dims);
    }
    b.finish();
  }

  {
    Block b(root.child("strategy"), "strategy");
    c.adaptive.T0 = b.get<double>("T0", c.adaptive.T0);
    c.sim.dither_enabled = b.get<bool>("dither", c.sim.dither_enabled);
    c.adaptive.gamma_floor = b.get<double>("gamma_floor", c.adaptive.gamma_floor);
    if (!(c.adaptive.T0 > 0.0)) throw ConfigError("strategy.T0", "must be positive");
    if (!(c.adaptive.gamma_floor >= 0.0)) throw ConfigError("strategy.gamma_floor", "must be >= 0");
    b.finish();
  }

  try {
    validate_sim_config(c.sim, dims);
  } catch (const ContractViolation& e) {
    throw ConfigError("sim", e.what());
  }

  {
    Block b(root.child("diagnostics"), "diagnostics");
    auto& d = c.diagnostics;
    d.n_seeds = b.get<std::size_t>("n_seeds", d.n_seeds);
    d.checkpoints = b.get<std::vector<double>>("checkpoints", d.checkpoints);
    d.deviations = b.get<std::vector<double>>("deviations", d.deviations);
    d.dither_epochs = b.get<int>("dither_epochs", d.dither_epochs);
    d.threads = b.get<unsigned>("threads", d.threads);
    if (d.n_seeds < 1) throw ConfigError("diagnostics.n_seeds", "must be >= 1");
    if (const json* t = b.child("thresholds")) {
      Block tb(t, "diagnostics.thresholds");
      auto& th = d.thresholds;
      th.stability_growth = tb.get<double>("stability_growth", th.stability_growth);
      th.consistency_fraction = tb.get<double>("consistency_fraction", th.consistency_fraction);
      th.nash_value_rel_tol = tb.get<double>("nash_value_rel_tol", th.nash_value_rel_tol);
      th.noise_free_payoff_tol = tb.get<double>("noise_free_payoff_tol", th.noise_free_payoff_tol);
      th.nash_gap_slack_fraction =
          tb.get<double>("nash_gap_slack_fraction", th.nash_gap_slack_fraction);
      th.nash_gap_iqr_multiplier =
          tb.get<double>("nash_gap_iqr_multiplier", th.nash_gap_iqr_multiplier);
      th.dither_band = tb.get<double>("dither_band", th.dither_band);
      tb.finish();
    }
    b.finish();
  }

  {
    Block b(root.child("output"), "output");
    c.output.directory = b.get<std::string>("directory", c.output.directory);
    c.output.emit_plot_script = b.get<bool>("emit_plot_script", c.output.emit_plot_script);
    b.finish();
  }

  root.finish();
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("syntax error: ") + e.what());
  }
  return parse_config(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": syntax error: " + e.what());
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return parse_config(doc);
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("", "override must look like KEY=VALUE, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError(key, "malformed override key");
    if (!node->is_object()) throw ConfigError(key, "override path crosses a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

json serialize_config(const ExperimentConfig& c) {
  json doc;
  doc["model"] = {{"A", matrix_json(c.model.A)},   {"B1", matrix_json(c.model.B1)},
                  {"B2", matrix_json(c.model.B2)}, {"D", matrix_json(c.model.D)},
                  {"Qw", matrix_json(c.model.Qw)}, {"R1", matrix_json(c.model.R1)},
                  {"R2", matrix_json(c.model.R2)}};
  doc["sim"] = {{"T", c.sim.horizon},
                {"h", c.sim.step},
                {"seed", c.sim.seed},
                {"x0", vector_json(c.sim.x0)},
                {"record_stride", c.sim.record_stride}};
  const auto& est = c.adaptive.estimator;
  json estimator = {{"cov0_scale", est.cov0_scale}, {"delta", est.f.delta}, {"gamma_reg", est.gamma_reg},
                    {"scheme", to_string(est.scheme)}};
  if (est.theta0.size() > 0) {
    const ThetaBlocks t = split_theta(est.theta0, c.model.dims());
    estimator["theta0"] = {{"A", matrix_json(t.A)}, {"B1", matrix_json(t.B1)}, {"B2", matrix_json(t.B2)}};
  }
  doc["estimator"] = estimator;
  doc["strategy"] = {{"T0", c.adaptive.T0},
                     {"dither", c.sim.dither_enabled},
                     {"gamma_floor", c.adaptive.gamma_floor}};
  const auto& d = c.diagnostics;
  const auto& th = d.thresholds;
  doc["diagnostics"] = {{"n_seeds", d.n_seeds},
                        {"checkpoints", d.checkpoints},
                        {"deviations", d.deviations},
                        {"dither_epochs", d.dither_epochs},
                        {"threads", d.threads},
                        {"thresholds",
                         {{"stability_growth", th.stability_growth},
                          {"consistency_fraction", th.consistency_fraction},
                          {"nash_value_rel_tol", th.nash_value_rel_tol},
                          {"noise_free_payoff_tol", th.noise_free_payoff_tol},
                          {"nash_gap_slack_fraction", th.nash_gap_slack_fraction},
                          {"nash_gap_iqr_multiplier", th.nash_gap_iqr_multiplier},
                          {"dither_band", th.dither_band}}}};
  doc["output"] = {{"directory", c.output.directory}, {"emit_plot_script", c.output.emit_plot_script}};
  return doc;
}

ExperimentSetup make_setup(const ExperimentConfig& config) {
  ExperimentSetup setup;
  setup.model = config.model;
  setup.sim = config.sim;
  setup.adaptive = config.adaptive;
  setup.n_seeds = config.diagnostics.n_seeds;
  setup.threads = config.diagnostics.threads;
  setup.thresholds = config.diagnostics.thresholds;
  return setup;
}

}  // namespace lqgame::cli
