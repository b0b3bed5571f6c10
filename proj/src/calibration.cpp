#include "dynborrow/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <exception>
#include <thread>

namespace dynborrow {
namespace {

RobustPriorSpec prior_at(const CalibrationRequest& req, CalibratedParameter p, double value) {
  RobustPriorSpec spec = req.design.prior;
  spec.w0 = req.w0;
  if (p == CalibratedParameter::Lambda) {
    spec.informative = PowerPrior{value};
  } else {
    spec.informative = MapPrior{HalfNormal{value}};
  }
  return spec;
}

void validate_request(CalibratedParameter p, const CalibrationRequest& req) {
  if (req.parameter_grid.empty()) throw std::invalid_argument("calibration: empty parameter grid");
  if (!(req.alpha_target > 0.0 && req.alpha_target <= 1.0)) {
    throw std::invalid_argument("calibration: alpha_target must lie in (0,1]");
  }
  if (!(req.w0 >= 0.0 && req.w0 <= 1.0)) throw std::invalid_argument("calibration: w0 must lie in [0,1]");
  if (req.threads < 1) throw std::invalid_argument("calibration: threads must be >= 1");
  for (std::size_t i = 0; i < req.parameter_grid.size(); ++i) {
    const double v = req.parameter_grid[i];
    if (i > 0 && !(v > req.parameter_grid[i - 1])) {
      throw std::invalid_argument("calibration: parameter grid must be strictly increasing");
    }
    if (p == CalibratedParameter::Lambda && !(v > 0.0 && v <= 1.0)) {
      throw std::invalid_argument("calibrate_lambda: grid values must lie in (0,1]");
    }
    if (p == CalibratedParameter::Nu && !(v > 0.0 && std::isfinite(v))) {
      throw std::invalid_argument("calibrate_nu: grid values must be > 0");
    }
  }
  DesignSpec probe = req.design;
  probe.prior = prior_at(req, p, req.parameter_grid.front());
  probe.validate();
}

SweepRow evaluate(const CalibrationRequest& req, CalibratedParameter p, double value) {
  DesignSpec design = req.design;
  design.prior = prior_at(req, p, value);
  const auto oc = operating_characteristics(design, PreparedPrior::from(design.prior, design.external));
  SweepRow row;
  row.parameter = value;
  row.attained = oc.attained;
  row.y_c = oc.y_c;
  row.alpha = oc.alpha;
  row.power = oc.power;
  row.boundary_w = oc.boundary_w;
  row.feasible = oc.attained && oc.alpha <= req.alpha_target;
  return row;
}

}  // namespace

const char* to_string(CalibratedParameter p) {
  return p == CalibratedParameter::Lambda ? "lambda" : "nu";
}

CalibrationResult calibrate(CalibratedParameter parameter, const CalibrationRequest& req) {
  validate_request(parameter, req);
  const auto& grid = req.parameter_grid;

  CalibrationResult result;
  result.parameter = parameter;
  result.mode = req.design.mode;
  result.swept.resize(grid.size());

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(req.threads), grid.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) result.swept[i] = evaluate(req, parameter, grid[i]);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
          try {
            for (std::size_t i = t; i < grid.size(); i += workers) {
              result.swept[i] = evaluate(req, parameter, grid[i]);
            }
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  // Larger lambda and smaller nu both mean more borrowing.
  const SweepRow* chosen = nullptr;
  for (const auto& row : result.swept) {
    if (!row.feasible) continue;
    if (parameter == CalibratedParameter::Lambda) {
      chosen = &row;  // ascending grid: keep the last feasible
    } else if (!chosen) {
      chosen = &row;
    }
  }
  if (chosen) {
    result.feasible = true;
    result.chosen_parameter = chosen->parameter;
    DesignSpec design = req.design;
    design.prior = prior_at(req, parameter, chosen->parameter);
    result.oc = operating_characteristics(design);
  }
  return result;
}

CalibrationResult calibrate_lambda(const CalibrationRequest& req) {
  return calibrate(CalibratedParameter::Lambda, req);
}

CalibrationResult calibrate_nu(const CalibrationRequest& req) {
  return calibrate(CalibratedParameter::Nu, req);
}

std::vector<ModeDisagreement> mode_disagreements(const CalibrationResult& a,
                                                 const CalibrationResult& b) {
  if (a.swept.size() != b.swept.size()) {
    throw std::invalid_argument("mode_disagreements: sweeps cover different grids");
  }
  std::vector<ModeDisagreement> out;
  for (std::size_t i = 0; i < a.swept.size(); ++i) {
    const auto& ra = a.swept[i];
    const auto& rb = b.swept[i];
    if (ra.parameter != rb.parameter) {
      throw std::invalid_argument("mode_disagreements: sweeps cover different grids");
    }
    const bool differ = ra.attained != rb.attained || (ra.attained && ra.y_c != rb.y_c);
    if (differ) out.push_back({ra.parameter, ra.attained, rb.attained, ra.y_c, rb.y_c});
  }
  return out;
}

}  // namespace dynborrow
