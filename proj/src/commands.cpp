#include "dynborrow/commands.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>
#include <thread>

#include "dynborrow/calibration.hpp"
#include "dynborrow/errors.hpp"
#include "dynborrow/oracle.hpp"
#include "dynborrow/posterior.hpp"

namespace dynborrow {
namespace {

Cell number_or_absent(double x) {
  if (std::isfinite(x)) return x;
  return std::monostate{};
}

std::string prior_label(const InformativePrior& p) {
  if (std::holds_alternative<PowerPrior>(p)) return "power";
  const auto& het = std::get<MapPrior>(p).heterogeneity;
  return std::holds_alternative<HalfNormal>(het) ? "map/half_normal" : "map/point_mass";
}

void collect_prior_warnings(const RunConfig& cfg, const PreparedPrior& prior, Report& report) {
  if (const auto* w = std::get_if<PartitionWeights>(&prior.informative)) {
    if (auto msg = unbounded_cell_warning(*w, cfg.unbounded_cell_threshold)) {
      report.warnings.push_back(*msg);
    }
  }
  if (cfg.external_sigma) {
    const double s = *cfg.external_sigma;
    if (auto msg = external_consistency_warning(cfg.design.external, s * s)) {
      report.warnings.push_back(*msg);
    }
  }
}

void describe_design(const RunConfig& cfg, Report& report) {
  report.set("mode", std::string(to_string(cfg.design.mode)));
  report.set("prior", prior_label(cfg.design.prior.informative));
  report.set("w0", cfg.design.prior.w0);
  if (const auto* p = std::get_if<PowerPrior>(&cfg.design.prior.informative)) {
    report.set("lambda", p->lambda);
  } else {
    const auto& het = std::get<MapPrior>(cfg.design.prior.informative).heterogeneity;
    if (const auto* hn = std::get_if<HalfNormal>(&het)) {
      report.set("nu", hn->scale);
    } else {
      report.set("tau", std::get<PointMass>(het).tau);
    }
  }
}

const HalfNormal& require_half_normal(const RunConfig& cfg, const char* command) {
  const auto* map = std::get_if<MapPrior>(&cfg.design.prior.informative);
  const HalfNormal* hn = map ? std::get_if<HalfNormal>(&map->heterogeneity) : nullptr;
  if (!hn) {
    throw ConfigError(cfg.source, 0,
                      std::string(command) +
                          " needs prior.informative.type 'map' with half_normal heterogeneity");
  }
  return *hn;
}

std::string y_label(double y) { return fmt::format("{:g}", y); }

Table calibration_sweep_table(const CalibrationResult& primary, const CalibrationResult& other) {
  const std::string other_mode = to_string(other.mode);
  Table t{std::string(to_string(primary.parameter)) + "_sweep",
          {"parameter", "attained", "y_c", "alpha", "power", "boundary_w", "feasible",
           "y_c_" + other_mode, "modes_disagree"},
          {}};
  for (std::size_t i = 0; i < primary.swept.size(); ++i) {
    const auto& a = primary.swept[i];
    const auto& b = other.swept[i];
    const bool disagree = a.attained != b.attained || (a.attained && a.y_c != b.y_c);
    t.add_row({a.parameter, a.attained, number_or_absent(a.attained ? a.y_c : NAN),
               number_or_absent(a.alpha), number_or_absent(a.power), number_or_absent(a.boundary_w),
               a.feasible, number_or_absent(b.attained ? b.y_c : NAN), disagree});
  }
  return t;
}

}  // namespace

Report cmd_posterior(const RunConfig& cfg, double y_star) {
  Report report;
  report.command = "posterior";
  const auto& d = cfg.design;
  const auto prior = PreparedPrior::from(d.prior, d.external);
  collect_prior_warnings(cfg, prior, report);
  const auto post = posterior(prior, d.target_at(y_star), d.external, d.posterior_options());

  describe_design(cfg, report);
  report.set("y_star", y_star);
  report.set("null_value", d.null_value);
  report.set("success_prob", post.success_prob);
  report.set("success", post.success_prob >= d.success_threshold);
  report.set("w", post.w);
  report.set("bayes_factor", post.bayes_factor);
  report.set("posterior_mean", post.mixture.mean());

  Table comps{"components", {"weight", "mean", "variance"}, {}};
  for (const auto& c : post.mixture.components()) comps.add_row({c.weight, c.mean, c.variance});
  report.tables.push_back(std::move(comps));

  if (post.borrowing_weights) {
    const auto& h0 = std::get<PartitionWeights>(prior.informative);
    const auto& h = *post.borrowing_weights;
    double prior_mean = 0.0;
    double post_mean = 0.0;
    Table cells{"borrowing", {"ess", "prior_mass", "posterior_mass"}, {}};
    for (std::size_t j = 0; j < h.size(); ++j) {
      prior_mean += h0.ess(j) * h0.mass[j];
      post_mean += h0.ess(j) * h[j];
      cells.add_row({h0.ess(j), h0.mass[j], h[j]});
    }
    report.set("ess_prior_mean", prior_mean);
    report.set("ess_posterior_mean", post_mean);
    report.set("h_unbounded_cell", h.front());

    const auto ph = ess_histogram(h0.mass, cfg.histogram.bin_width);
    const auto qh = ess_histogram(h, cfg.histogram.bin_width);
    Table hist{"borrowing_histogram", {"bin_lo", "bin_hi", "prior_mass", "posterior_mass"}, {}};
    for (std::size_t k = 0; k < ph.masses.size(); ++k) {
      hist.add_row({ph.edges[k], ph.edges[k + 1], ph.masses[k], qh.masses[k]});
    }
    report.tables.push_back(std::move(cells));
    report.tables.push_back(std::move(hist));
  }
  return report;
}

Report cmd_oc(const RunConfig& cfg) {
  Report report;
  report.command = "oc";
  const auto& d = cfg.design;
  const auto prior = PreparedPrior::from(d.prior, d.external);
  collect_prior_warnings(cfg, prior, report);
  const auto oc = operating_characteristics(d, prior);

  describe_design(cfg, report);
  report.set("attained", oc.attained);
  report.set("y_c", number_or_absent(oc.y_c));
  report.set("alpha", number_or_absent(oc.alpha));
  report.set("power", number_or_absent(oc.power));
  report.set("boundary_w", number_or_absent(oc.boundary_w));
  report.set("max_success_prob", oc.max_success_prob);
  report.set("upper_set", qualifying_points_form_upper_set(oc.sweep, d.success_threshold));

  Table sweep{"sweep", {"y", "success_prob", "w", "bayes_factor", "qualifies"}, {}};
  for (const auto& p : oc.sweep) {
    sweep.add_row({p.y, p.success_prob, p.w, p.bayes_factor, p.success_prob >= d.success_threshold});
  }
  report.tables.push_back(std::move(sweep));
  return report;
}

Report cmd_calibrate(const RunConfig& cfg) {
  if (!cfg.calibration) throw ConfigError(cfg.source, 0, "calibrate needs a 'calibration' section");
  const auto& cal = *cfg.calibration;
  Report report;
  report.command = "calibrate";
  report.set("mode", std::string(to_string(cfg.design.mode)));
  report.set("w0", cfg.design.prior.w0);
  report.set("alpha_target", cal.alpha_target);

  CalibrationRequest req;
  req.design = cfg.design;
  req.w0 = cfg.design.prior.w0;
  req.alpha_target = cal.alpha_target;
  req.threads = cal.threads;

  const auto other_mode = cfg.design.mode == PosteriorMode::Exact ? PosteriorMode::Replication
                                                                  : PosteriorMode::Exact;
  bool all_feasible = true;
  std::vector<const CalibrationResult*> chosen;
  std::vector<CalibrationResult> results;
  results.reserve(2);

  auto run = [&](CalibratedParameter param, const std::vector<double>& grid) {
    req.parameter_grid = grid;
    req.design.mode = cfg.design.mode;
    auto primary = calibrate(param, req);
    req.design.mode = other_mode;
    const auto other = calibrate(param, req);

    const std::string p = to_string(param);
    report.set(p + "_feasible", primary.feasible);
    if (primary.feasible) {
      report.set(p + "_chosen", primary.chosen_parameter);
      report.set(p + "_y_c", primary.oc.y_c);
      report.set(p + "_alpha", primary.oc.alpha);
      report.set(p + "_power", primary.oc.power);
      report.set(p + "_boundary_w", primary.oc.boundary_w);
    }
    report.set(p + "_chosen_" + to_string(other_mode),
               other.feasible ? Cell(other.chosen_parameter) : Cell(std::monostate{}));
    report.set(p + "_mode_disagreements",
               static_cast<std::int64_t>(mode_disagreements(primary, other).size()));
    report.tables.push_back(calibration_sweep_table(primary, other));
    all_feasible = all_feasible && primary.feasible;
    results.push_back(std::move(primary));
  };

  if (cal.lambda_grid) run(CalibratedParameter::Lambda, *cal.lambda_grid);
  if (cal.nu_grid) run(CalibratedParameter::Nu, *cal.nu_grid);

  if (results.size() == 2 && results[0].feasible && results[1].feasible) {
    const auto& a = results[0].oc;
    const auto& b = results[1].oc;
    report.set("triples_match", a.y_c == b.y_c && a.alpha == b.alpha && a.power == b.power);
  }
  report.set("feasible", all_feasible);
  return report;
}

Report cmd_ess_hist(const RunConfig& cfg, const std::vector<double>& y_star) {
  const auto& hn = require_half_normal(cfg, "ess-hist");
  const auto& d = cfg.design;
  Report report;
  report.command = "ess_hist";
  const auto prior = PreparedPrior::from(d.prior, d.external);
  collect_prior_warnings(cfg, prior, report);
  describe_design(cfg, report);
  report.set("bin_width", static_cast<std::int64_t>(cfg.histogram.bin_width));

  const auto& h0 = std::get<PartitionWeights>(prior.informative);
  auto make_table = [&](const std::string& name, const std::vector<double>& weights,
                        const std::optional<StudySummary>& target) {
    const auto hist = ess_histogram(weights, cfg.histogram.bin_width);
    const auto quad = oracle::ess_bin_masses(target, d.external, hn, hist.edges,
                                             cfg.validation.quadrature);
    Table t{name, {"bin_lo", "bin_hi", "mass", "quadrature_mass"}, {}};
    double max_diff = 0.0;
    for (std::size_t k = 0; k < hist.masses.size(); ++k) {
      t.add_row({hist.edges[k], hist.edges[k + 1], hist.masses[k], quad[k]});
      max_diff = std::max(max_diff, std::abs(hist.masses[k] - quad[k]));
    }
    report.set(name + "_max_abs_diff", max_diff);
    report.tables.push_back(std::move(t));
  };

  make_table("prior", h0.mass, std::nullopt);
  for (double y : y_star) {
    const auto post = posterior(prior, d.target_at(y), d.external, d.posterior_options());
    make_table("posterior_y" + y_label(y), *post.borrowing_weights, d.target_at(y));
  }
  return report;
}

Report cmd_validate(const RunConfig& cfg) {
  const auto& d = cfg.design;
  const auto& v = cfg.validation;
  Report report;
  report.command = "validate";
  const auto prior = PreparedPrior::from(d.prior, d.external);
  collect_prior_warnings(cfg, prior, report);
  describe_design(cfg, report);
  bool all_pass = true;

  const auto* map = std::get_if<MapPrior>(&d.prior.informative);
  if (map && std::holds_alternative<HalfNormal>(map->heterogeneity)) {
    Table q{"quadrature",
            {"y_star", "closed_form", "quadrature", "abs_diff", "tolerance", "convergence",
             "converged", "pass"},
            {}};
    for (double y : v.y_star) {
      const auto closed = posterior(prior, d.target_at(y), d.external, d.posterior_options());
      const auto quad = oracle::map_posterior_quadrature(d.target_at(y), d.external,
                                                         d.prior.vague_variance, map->heterogeneity,
                                                         d.prior.w0, v.quadrature,
                                                         d.posterior_options());
      const double diff = std::abs(closed.success_prob - quad.success_prob);
      const bool pass = diff <= v.success_prob_tolerance && quad.converged;
      all_pass = all_pass && pass;
      q.add_row({y, closed.success_prob, quad.success_prob, diff, v.success_prob_tolerance,
                 quad.convergence_estimate, quad.converged, pass});
    }
    report.tables.push_back(std::move(q));
  } else {
    report.warnings.push_back("quadrature comparison skipped: the informative prior has a closed form");
  }

  const auto oc = operating_characteristics(d, prior);
  report.set("y_c", number_or_absent(oc.y_c));
  report.set("mc_seed", static_cast<std::int64_t>(cfg.seed));
  report.set("mc_algorithm", std::string(oracle::NormalStream::kAlgorithm));
  report.set("mc_replicates", v.replicates);
  report.set("decision_rule", std::string(v.decision_rule == oracle::DecisionRule::GridSnapped
                                              ? "grid_snapped"
                                              : "continuous"));
  if (oc.attained) {
    Table mc{"monte_carlo",
             {"true_effect", "closed_form", "estimate", "std_error", "abs_diff", "bound", "pass"},
             {}};
    for (double t : v.true_effects) {
      oracle::MonteCarloSettings s;
      s.replicates = v.replicates;
      s.seed = cfg.seed;
      s.true_effect = t;
      s.rule = v.decision_rule;
      // Blocks carry their own streams, so the estimate does not depend on this.
      s.threads = static_cast<int>(std::clamp(std::thread::hardware_concurrency(), 1u, 8u));
      const auto sim = oracle::monte_carlo_oc(d, s);
      // P(y* >= y_c | theta = t) has the same normal-tail form as the power.
      const double closed = power_at(oc.y_c, t, d.target_n, d.sigma);
      const double bound =
          v.mc_sigma_multiplier * std::sqrt(closed * (1.0 - closed) / static_cast<double>(v.replicates));
      const double diff = std::abs(sim.estimate - closed);
      const bool pass = diff <= bound;
      all_pass = all_pass && pass;
      mc.add_row({t, closed, sim.estimate, sim.std_error, diff, bound, pass});
    }
    report.tables.push_back(std::move(mc));
  } else {
    report.warnings.push_back("Monte-Carlo comparison skipped: boundary not attained on the grid");
    all_pass = false;
  }
  report.set("all_pass", all_pass);
  return report;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust power / robust MAP prior design tool"};
  app.require_subcommand(1);

  struct Common {
    std::string config;
    std::string mode;
    std::string format;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
  };
  Common common;
  double y_star = 0.0;
  std::vector<double> hist_y;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "YAML run configuration")->required();
    sub->add_option("--mode", common.mode, "exact|replication (overrides config)")
        ->check(CLI::IsMember({"exact", "replication"}));
    sub->add_option("--format", common.format, "csv|json (overrides config)")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--out", common.out_dir, "write result files into this directory");
    sub->add_option("--seed", common.seed, "Monte-Carlo seed (overrides config)");
  };

  auto* posterior_cmd = app.add_subcommand("posterior", "posterior summary at one observed y*");
  add_common(posterior_cmd);
  posterior_cmd->add_option("--y-star", y_star, "observed target effect")->required();
  auto* oc_cmd = app.add_subcommand("oc", "critical boundary, type I error and power");
  add_common(oc_cmd);
  auto* cal_cmd = app.add_subcommand("calibrate", "grid-search lambda and/or nu");
  add_common(cal_cmd);
  auto* hist_cmd = app.add_subcommand("ess-hist", "effective-sample-size histograms");
  add_common(hist_cmd);
  hist_cmd->add_option("--y-star", hist_y, "observed target effects (default from config)")
      ->delimiter(',');
  auto* val_cmd = app.add_subcommand("validate", "compare against quadrature and simulation");
  add_common(val_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    auto cfg = load_config(common.config);
    if (!common.mode.empty()) cfg.design.mode = parse_posterior_mode(common.mode);
    if (!common.format.empty()) cfg.format = common.format == "json" ? OutputFormat::Json : OutputFormat::Csv;
    if (common.seed) cfg.seed = *common.seed;

    Report report;
    if (posterior_cmd->parsed()) {
      report = cmd_posterior(cfg, y_star);
    } else if (oc_cmd->parsed()) {
      report = cmd_oc(cfg);
    } else if (cal_cmd->parsed()) {
      report = cmd_calibrate(cfg);
    } else if (hist_cmd->parsed()) {
      report = cmd_ess_hist(cfg, hist_y.empty() ? cfg.histogram.y_star : hist_y);
    } else {
      report = cmd_validate(cfg);
    }

    for (const auto& w : report.warnings) err << "warning: " << w << "\n";
    if (common.out_dir.empty()) {
      print_report(report, cfg.format, out);
    } else {
      print_display(report, out);
      for (const auto& p : write_report(report, cfg.format, common.out_dir)) {
        out << "wrote " << p.string() << "\n";
      }
    }
    if (report.command == "calibrate" && !std::get<bool>(report.get("feasible"))) {
      err << "error: no grid value meets the type I error target\n";
      return kExitInfeasible;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "domain error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::range_error& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::domain_error& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace dynborrow
