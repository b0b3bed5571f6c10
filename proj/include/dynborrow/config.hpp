#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynborrow/oc.hpp"
#include "dynborrow/oracle.hpp"

namespace dynborrow {

/// Schema violation in a run configuration. `line` is 1-based, 0 when the
/// problem has no location (e.g. a missing file).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

enum class OutputFormat { Csv, Json };

struct CalibrationSettings {
  double alpha_target = 0.2;
  std::optional<std::vector<double>> lambda_grid;
  std::optional<std::vector<double>> nu_grid;
  int threads = 1;
};

struct ValidationSettings {
  std::vector<double> y_star{0, 25, 50, 75, 100};
  oracle::QuadratureSettings quadrature;
  double success_prob_tolerance = 1e-3;
  std::int64_t replicates = 100000;
  std::vector<double> true_effects{0, 100};
  double mc_sigma_multiplier = 3.0;
  oracle::DecisionRule decision_rule = oracle::DecisionRule::GridSnapped;
};

struct HistogramSettings {
  int bin_width = 100;
  std::vector<double> y_star{0, 50, 100};
};

/// Everything a CLI run needs, read from one YAML document.
struct RunConfig {
  std::string source;
  OutputFormat format = OutputFormat::Csv;
  std::uint64_t seed = 20240601;
  DesignSpec design;
  std::optional<double> external_sigma;  // only used for a consistency warning
  double unbounded_cell_threshold = kDefaultUnboundedCellWarning;
  std::optional<CalibrationSettings> calibration;
  ValidationSettings validation;
  HistogramSettings histogram;
};

RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace dynborrow
