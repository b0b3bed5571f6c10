#pragma once

#include <cstddef>
#include <vector>

#include "dynborrow/posterior.hpp"
#include "dynborrow/priors.hpp"

namespace dynborrow {

/// A single-region design: target sample size and sampling SD, the external
/// summary, the robust prior and the decision rule
/// P(theta* > null_value | data) >= success_threshold.
struct DesignSpec {
  int target_n = 1;
  double sigma = 1.0;      // within-group SD used by the OC formulas
  double target_se = 1.0;  // standard error of y* used in the posterior
  StudySummary external;
  RobustPriorSpec prior;
  double success_threshold = 0.95;
  double null_value = 0.0;
  double alternative = 0.0;
  std::vector<double> decision_grid;
  PosteriorMode mode = PosteriorMode::Exact;

  StudySummary target_at(double y_star) const { return {target_n, y_star, target_se}; }
  PosteriorOptions posterior_options() const { return {mode, null_value}; }
  void validate() const;
};

/// Values from `from` to `to` inclusive in steps of `step`, computed as
/// from + k * step so long grids do not accumulate rounding.
std::vector<double> make_grid(double from, double to, double step);

/// Integers null_value..alternative, the usual decision grid.
std::vector<double> default_decision_grid(double null_value, double alternative, double step = 1.0);

struct GridPoint {
  double y = 0.0;
  double success_prob = 0.0;
  double w = 0.0;
  double bayes_factor = 0.0;
};

std::vector<GridPoint> scan_decision_grid(const DesignSpec& design);
std::vector<GridPoint> scan_decision_grid(const DesignSpec& design, const PreparedPrior& prior);

/// Smallest grid value whose success probability reaches the threshold.
/// Not attaining it is a normal outcome, reported with the best probability
/// seen.
struct BoundaryResult {
  bool attained = false;
  double y_c = 0.0;
  std::size_t index = 0;
  double max_success_prob = 0.0;
};

BoundaryResult critical_boundary(const DesignSpec& design);
BoundaryResult find_boundary(const std::vector<GridPoint>& sweep, double threshold);

/// True when the qualifying grid points form an upper set of the grid.
bool qualifying_points_form_upper_set(const std::vector<GridPoint>& sweep, double threshold);

/// 1 - Phi(sqrt(n) (y_c - null_value) / (2 sigma)).
double type_one_error(double y_c, int n, double sigma, double null_value = 0.0);

/// 1 - Phi(sqrt(n) (y_c - y_a) / (2 sigma)).
double power_at(double y_c, double y_a, int n, double sigma);

struct OCResult {
  bool attained = false;
  double y_c = 0.0;
  double alpha = 0.0;
  double power = 0.0;
  double boundary_w = 0.0;
  double max_success_prob = 0.0;
  PosteriorMode mode = PosteriorMode::Exact;
  std::vector<GridPoint> sweep;
};

OCResult operating_characteristics(const DesignSpec& design);
OCResult operating_characteristics(const DesignSpec& design, const PreparedPrior& prior);

}  // namespace dynborrow
