#include "dynborrow/oc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dynborrow {
namespace {

void check_n_sigma(int n, double sigma) {
  if (n < 1) throw std::invalid_argument("operating characteristics: n must be >= 1");
  if (!std::isfinite(sigma) || !(sigma > 0.0)) {
    throw std::invalid_argument("operating characteristics: sigma must be finite and > 0");
  }
}

double upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

void DesignSpec::validate() const {
  if (target_n < 1) throw std::invalid_argument("DesignSpec: target_n must be >= 1");
  if (!std::isfinite(sigma) || !(sigma > 0.0)) throw std::invalid_argument("DesignSpec: sigma must be > 0");
  if (!std::isfinite(target_se) || !(target_se > 0.0)) {
    throw std::invalid_argument("DesignSpec: target_se must be > 0");
  }
  external.validate();
  prior.validate();
  if (!(success_threshold >= 0.0 && success_threshold <= 1.0)) {
    throw std::invalid_argument("DesignSpec: success_threshold must lie in [0,1]");
  }
  if (!std::isfinite(null_value) || !std::isfinite(alternative)) {
    throw std::invalid_argument("DesignSpec: null_value and alternative must be finite");
  }
  if (decision_grid.empty()) throw std::invalid_argument("DesignSpec: decision_grid is empty");
  for (std::size_t i = 0; i < decision_grid.size(); ++i) {
    if (!std::isfinite(decision_grid[i])) throw std::invalid_argument("DesignSpec: non-finite grid value");
    if (i > 0 && !(decision_grid[i] > decision_grid[i - 1])) {
      throw std::invalid_argument("DesignSpec: decision_grid must be strictly increasing");
    }
  }
}

std::vector<double> make_grid(double from, double to, double step) {
  if (!std::isfinite(from) || !std::isfinite(to) || !std::isfinite(step) || !(step > 0.0)) {
    throw std::invalid_argument("make_grid: need finite bounds and step > 0");
  }
  if (to < from) throw std::invalid_argument("make_grid: 'to' is below 'from'");
  std::vector<double> grid;
  const auto count = static_cast<long>(std::floor((to - from) / step + 1e-9)) + 1;
  grid.reserve(static_cast<std::size_t>(count));
  for (long k = 0; k < count; ++k) grid.push_back(from + static_cast<double>(k) * step);
  return grid;
}

std::vector<double> default_decision_grid(double null_value, double alternative, double step) {
  return make_grid(null_value, alternative, step);
}

std::vector<GridPoint> scan_decision_grid(const DesignSpec& design) {
  design.validate();
  return scan_decision_grid(design, PreparedPrior::from(design.prior, design.external));
}

std::vector<GridPoint> scan_decision_grid(const DesignSpec& design, const PreparedPrior& prior) {
  const auto opts = design.posterior_options();
  std::vector<GridPoint> sweep;
  sweep.reserve(design.decision_grid.size());
  for (double y : design.decision_grid) {
    const auto post = posterior(prior, design.target_at(y), design.external, opts);
    sweep.push_back({y, post.success_prob, post.w, post.bayes_factor});
  }
  return sweep;
}

BoundaryResult find_boundary(const std::vector<GridPoint>& sweep, double threshold) {
  BoundaryResult r;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    r.max_success_prob = std::max(r.max_success_prob, sweep[i].success_prob);
    if (!r.attained && sweep[i].success_prob >= threshold) {
      r.attained = true;
      r.index = i;
      r.y_c = sweep[i].y;
    }
  }
  return r;
}

BoundaryResult critical_boundary(const DesignSpec& design) {
  return find_boundary(scan_decision_grid(design), design.success_threshold);
}

bool qualifying_points_form_upper_set(const std::vector<GridPoint>& sweep, double threshold) {
  bool seen = false;
  for (const auto& p : sweep) {
    const bool ok = p.success_prob >= threshold;
    if (seen && !ok) return false;
    seen = seen || ok;
  }
  return true;
}

double type_one_error(double y_c, int n, double sigma, double null_value) {
  check_n_sigma(n, sigma);
  if (std::isnan(y_c)) throw std::invalid_argument("type_one_error: y_c is NaN");
  return upper_tail(std::sqrt(static_cast<double>(n)) * (y_c - null_value) / (2.0 * sigma));
}

double power_at(double y_c, double y_a, int n, double sigma) {
  check_n_sigma(n, sigma);
  if (std::isnan(y_c) || std::isnan(y_a)) throw std::invalid_argument("power_at: NaN input");
  return upper_tail(std::sqrt(static_cast<double>(n)) * (y_c - y_a) / (2.0 * sigma));
}

OCResult operating_characteristics(const DesignSpec& design) {
  design.validate();
  return operating_characteristics(design, PreparedPrior::from(design.prior, design.external));
}

OCResult operating_characteristics(const DesignSpec& design, const PreparedPrior& prior) {
  OCResult r;
  r.mode = design.mode;
  r.sweep = scan_decision_grid(design, prior);
  const auto b = find_boundary(r.sweep, design.success_threshold);
  r.attained = b.attained;
  r.max_success_prob = b.max_success_prob;
  if (b.attained) {
    r.y_c = b.y_c;
    r.alpha = type_one_error(b.y_c, design.target_n, design.sigma, design.null_value);
    r.power = power_at(b.y_c, design.alternative, design.target_n, design.sigma);
    r.boundary_w = r.sweep[b.index].w;
  } else {
    r.y_c = r.alpha = r.power = r.boundary_w = std::nan("");
  }
  return r;
}

}  // namespace dynborrow
