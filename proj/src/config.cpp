#include "dynborrow/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace dynborrow {
namespace {

// Thin wrapper pairing a YAML node with its location for error messages.
class Reader {
 public:
  Reader(const YAML::Node& node, std::string path, const std::string& source)
      : node_(node), path_(std::move(path)), source_(source) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(source_, line(), path_ + ": " + msg);
  }

  int line() const { return node_.Mark().line >= 0 ? node_.Mark().line + 1 : 0; }

  void expect_map(std::initializer_list<const char*> allowed) const {
    if (!node_.IsMap()) fail("expected a mapping");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!ok.contains(key)) {
        throw ConfigError(source_, kv.first.Mark().line + 1,
                          path_ + ": unknown key '" + key + "'");
      }
    }
  }

  bool has(const char* key) const { return node_[key].IsDefined() && !node_[key].IsNull(); }

  Reader child(const char* key) const {
    if (!has(key)) fail(std::string("missing required key '") + key + "'");
    return Reader(node_[key], path_ + "." + key, source_);
  }

  std::optional<Reader> optional_child(const char* key) const {
    if (!has(key)) return std::nullopt;
    return Reader(node_[key], path_ + "." + key, source_);
  }

  double as_double() const {
    if (!node_.IsScalar()) fail("expected a number");
    try {
      const double v = node_.as<double>();
      if (!std::isfinite(v)) fail("expected a finite number");
      return v;
    } catch (const YAML::Exception&) {
      fail("expected a number, got '" + node_.Scalar() + "'");
    }
  }

  std::int64_t as_int() const {
    if (!node_.IsScalar()) fail("expected an integer");
    try {
      return node_.as<std::int64_t>();
    } catch (const YAML::Exception&) {
      fail("expected an integer, got '" + node_.Scalar() + "'");
    }
  }

  std::uint64_t as_uint() const {
    if (!node_.IsScalar()) fail("expected a non-negative integer");
    try {
      return node_.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      fail("expected a non-negative integer, got '" + node_.Scalar() + "'");
    }
  }

  std::string as_string() const {
    if (!node_.IsScalar()) fail("expected a string");
    return node_.Scalar();
  }

  std::vector<double> as_double_list() const {
    if (!node_.IsSequence() || node_.size() == 0) fail("expected a non-empty list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < node_.size(); ++i) {
      out.push_back(Reader(node_[i], path_ + "[" + std::to_string(i) + "]", source_).as_double());
    }
    return out;
  }

  const YAML::Node& node() const { return node_; }

  double number(const char* key) const { return child(key).as_double(); }
  double number_or(const char* key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

 private:
  YAML::Node node_;
  std::string path_;
  const std::string& source_;
};

int positive_int(const Reader& r) {
  const auto v = r.as_int();
  if (v < 1 || v > std::numeric_limits<int>::max()) r.fail("expected an integer >= 1");
  return static_cast<int>(v);
}

// {from, to, step[, divide_by]} or an explicit list.
std::vector<double> read_grid(const Reader& r) {
  std::vector<double> grid;
  if (r.node().IsSequence()) {
    grid = r.as_double_list();
  } else {
    r.expect_map({"from", "to", "step", "divide_by"});
    const double step = r.number_or("step", 1.0);
    if (!(step > 0.0)) r.fail("step must be > 0");
    const double from = r.number("from");
    const double to = r.number("to");
    if (to < from) r.fail("'to' is below 'from'");
    grid = make_grid(from, to, step);
    if (r.has("divide_by")) {
      const double d = r.number("divide_by");
      if (!(d > 0.0)) r.fail("divide_by must be > 0");
      for (double& g : grid) g /= d;
    }
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) r.fail("grid must be strictly increasing");
  }
  return grid;
}

StudySummary read_external(const Reader& r) {
  r.expect_map({"n", "y_hat", "se", "sigma"});
  StudySummary s;
  s.n = positive_int(r.child("n"));
  s.y_hat = r.number("y_hat");
  s.se = r.number("se");
  if (!(s.se > 0.0)) r.child("se").fail("must be > 0");
  return s;
}

HeterogeneityPrior read_heterogeneity(const Reader& r) {
  r.expect_map({"type", "scale", "tau"});
  const auto type = r.child("type").as_string();
  if (type == "half_normal") {
    const double scale = r.number("scale");
    if (!(scale > 0.0)) r.child("scale").fail("must be > 0");
    return HalfNormal{scale};
  }
  if (type == "point_mass") {
    const double tau = r.number("tau");
    if (tau < 0.0) r.child("tau").fail("must be >= 0");
    return PointMass{tau};
  }
  r.child("type").fail("expected 'half_normal' or 'point_mass', got '" + type + "'");
}

InformativePrior read_informative(const Reader& r) {
  r.expect_map({"type", "lambda", "heterogeneity"});
  const auto type = r.child("type").as_string();
  if (type == "power") {
    const double lambda = r.number("lambda");
    if (!(lambda > 0.0 && lambda <= 1.0)) r.child("lambda").fail("must lie in (0, 1]");
    return PowerPrior{lambda};
  }
  if (type == "map") return MapPrior{read_heterogeneity(r.child("heterogeneity"))};
  r.child("type").fail("expected 'power' or 'map', got '" + type + "'");
}

void read_prior(const Reader& r, RunConfig& cfg) {
  r.expect_map({"w0", "vague_variance", "informative", "unbounded_cell_warning"});
  auto& p = cfg.design.prior;
  p.w0 = r.number("w0");
  if (!(p.w0 >= 0.0 && p.w0 <= 1.0)) r.child("w0").fail("must lie in [0, 1]");
  p.vague_variance = r.number("vague_variance");
  if (!(p.vague_variance > 0.0)) r.child("vague_variance").fail("must be > 0");
  p.informative = read_informative(r.child("informative"));
  cfg.unbounded_cell_threshold = r.number_or("unbounded_cell_warning", kDefaultUnboundedCellWarning);
}

void read_decision(const Reader& r, DesignSpec& d) {
  r.expect_map({"threshold", "null_value", "alternative", "grid"});
  d.success_threshold = r.number_or("threshold", 0.95);
  if (!(d.success_threshold > 0.5 && d.success_threshold < 1.0)) {
    r.child("threshold").fail("must lie in (0.5, 1)");
  }
  d.null_value = r.number_or("null_value", 0.0);
  d.alternative = r.number("alternative");
  if (r.has("grid")) {
    const auto g = r.child("grid");
    d.decision_grid = read_grid(g);
  } else {
    d.decision_grid = default_decision_grid(d.null_value, d.alternative);
  }
}

CalibrationSettings read_calibration(const Reader& r) {
  r.expect_map({"alpha_target", "lambda_grid", "nu_grid", "threads"});
  CalibrationSettings c;
  c.alpha_target = r.number("alpha_target");
  if (!(c.alpha_target > 0.0 && c.alpha_target < 1.0)) r.child("alpha_target").fail("must lie in (0, 1)");
  if (auto g = r.optional_child("lambda_grid")) {
    c.lambda_grid = read_grid(*g);
    for (double v : *c.lambda_grid) {
      if (!(v > 0.0 && v <= 1.0)) g->fail("lambda values must lie in (0, 1]");
    }
  }
  if (auto g = r.optional_child("nu_grid")) {
    c.nu_grid = read_grid(*g);
    for (double v : *c.nu_grid) {
      if (!(v > 0.0)) g->fail("nu values must be > 0");
    }
  }
  if (!c.lambda_grid && !c.nu_grid) r.fail("needs lambda_grid and/or nu_grid");
  if (r.has("threads")) c.threads = positive_int(r.child("threads"));
  return c;
}

ValidationSettings read_validation(const Reader& r) {
  r.expect_map({"y_star", "quadrature_nodes", "tau_upper_quantile", "convergence_tolerance",
                "success_prob_tolerance", "replicates", "true_effects", "mc_sigma_multiplier",
                "decision_rule"});
  ValidationSettings v;
  if (auto c = r.optional_child("y_star")) v.y_star = c->as_double_list();
  if (auto c = r.optional_child("quadrature_nodes")) {
    v.quadrature.node_count = positive_int(*c);
    if (v.quadrature.node_count < 100) c->fail("must be >= 100");
  }
  if (auto c = r.optional_child("tau_upper_quantile")) {
    v.quadrature.tau_upper_quantile = c->as_double();
    if (!(v.quadrature.tau_upper_quantile > 0.9 && v.quadrature.tau_upper_quantile < 1.0)) {
      c->fail("must lie in (0.9, 1)");
    }
  }
  v.quadrature.convergence_tolerance = r.number_or("convergence_tolerance", 1e-6);
  v.success_prob_tolerance = r.number_or("success_prob_tolerance", 1e-3);
  if (auto c = r.optional_child("replicates")) v.replicates = positive_int(*c);
  if (auto c = r.optional_child("true_effects")) v.true_effects = c->as_double_list();
  v.mc_sigma_multiplier = r.number_or("mc_sigma_multiplier", 3.0);
  if (auto c = r.optional_child("decision_rule")) {
    const auto s = c->as_string();
    if (s == "grid_snapped") {
      v.decision_rule = oracle::DecisionRule::GridSnapped;
    } else if (s == "continuous") {
      v.decision_rule = oracle::DecisionRule::Continuous;
    } else {
      c->fail("expected 'grid_snapped' or 'continuous'");
    }
  }
  return v;
}

HistogramSettings read_histogram(const Reader& r) {
  r.expect_map({"bin_width", "y_star"});
  HistogramSettings h;
  if (auto c = r.optional_child("bin_width")) h.bin_width = positive_int(*c);
  if (auto c = r.optional_child("y_star")) h.y_star = c->as_double_list();
  return h;
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " +
                         message),
      line_(line) {}

RunConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source, e.mark.line + 1, e.msg);
  }
  RunConfig cfg;
  cfg.source = source;
  Reader r(root, "config", cfg.source);
  if (!root.IsMap()) throw ConfigError(source, 1, "config: expected a mapping at top level");
  r.expect_map({"mode", "format", "seed", "target", "external", "prior", "decision", "calibration",
                "validation", "histogram"});

  if (auto c = r.optional_child("mode")) {
    const auto m = c->as_string();
    if (m != "exact" && m != "replication") c->fail("expected 'exact' or 'replication'");
    cfg.design.mode = parse_posterior_mode(m);
  }
  if (auto c = r.optional_child("format")) {
    const auto f = c->as_string();
    if (f == "csv") {
      cfg.format = OutputFormat::Csv;
    } else if (f == "json") {
      cfg.format = OutputFormat::Json;
    } else {
      c->fail("expected 'csv' or 'json'");
    }
  }
  if (auto c = r.optional_child("seed")) cfg.seed = c->as_uint();

  const auto target = r.child("target");
  target.expect_map({"n", "sigma", "se"});
  cfg.design.target_n = positive_int(target.child("n"));
  cfg.design.sigma = target.number("sigma");
  if (!(cfg.design.sigma > 0.0)) target.child("sigma").fail("must be > 0");
  cfg.design.target_se = target.number("se");
  if (!(cfg.design.target_se > 0.0)) target.child("se").fail("must be > 0");

  const auto external = r.child("external");
  cfg.design.external = read_external(external);
  if (external.has("sigma")) {
    cfg.external_sigma = external.number("sigma");
    if (!(*cfg.external_sigma > 0.0)) external.child("sigma").fail("must be > 0");
  }

  read_prior(r.child("prior"), cfg);
  read_decision(r.child("decision"), cfg.design);
  if (auto c = r.optional_child("calibration")) cfg.calibration = read_calibration(*c);
  if (auto c = r.optional_child("validation")) cfg.validation = read_validation(*c);
  if (auto c = r.optional_child("histogram")) cfg.histogram = read_histogram(*c);

  try {
    cfg.design.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source, 0, e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace dynborrow
