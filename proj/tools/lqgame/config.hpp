#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lqgame/diagnostics.hpp"
#include "lqgame/model.hpp"
#include "lqgame/sim.hpp"

namespace lqgame::cli {

/// Bad configuration: parse error, unknown key, missing field or a value that
/// breaks a model/sim invariant. `field` is the dotted path when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}
  [[nodiscard]] const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct DiagnosticsSettings {
  std::size_t n_seeds = 20;
  std::vector<double> checkpoints{200.0, 1000.0, 5000.0};
  std::vector<double> deviations{-0.3, 0.3};
  int dither_epochs = 200;
  unsigned threads = 0;
  Thresholds thresholds;
};

struct OutputSettings {
  std::string directory = "lqgame-out";
  bool emit_plot_script = false;
};

/// Whole experiment description. JSON on disk; every block except `model` is
/// optional and falls back to the defaults above. Unknown keys are rejected.
struct ExperimentConfig {
  GameModel model;
  SimConfig sim;
  AdaptiveSettings adaptive;  ///< estimator + strategy blocks
  DiagnosticsSettings diagnostics;
  OutputSettings output;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});

/// Full document with every default spelled out; parse_config(serialize(c))
/// reproduces c.
nlohmann::json serialize_config(const ExperimentConfig& config);

/// Applies "a.b.c=VALUE" to the document. VALUE is parsed as JSON and falls
/// back to a plain string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

ExperimentSetup make_setup(const ExperimentConfig& config);

}  // namespace lqgame::cli
