#pragma once

#include <vector>

#include "dynborrow/oc.hpp"

namespace dynborrow {

enum class CalibratedParameter { Lambda, Nu };

const char* to_string(CalibratedParameter p);

/// Search for the prior parameter giving the most borrowing while keeping the
/// type I error at or below alpha_target, with w0 held fixed. The design's
/// informative prior is replaced at every grid point; its w0 by `w0`.
struct CalibrationRequest {
  DesignSpec design;
  double w0 = 0.5;
  double alpha_target = 0.2;
  std::vector<double> parameter_grid;
  int threads = 1;  // grid points are independent; results are gathered in grid order
};

struct SweepRow {
  double parameter = 0.0;
  bool attained = false;
  double y_c = 0.0;
  double alpha = 0.0;
  double power = 0.0;
  double boundary_w = 0.0;
  bool feasible = false;  // attained and alpha <= alpha_target
};

struct CalibrationResult {
  CalibratedParameter parameter = CalibratedParameter::Lambda;
  PosteriorMode mode = PosteriorMode::Exact;
  bool feasible = false;
  double chosen_parameter = 0.0;
  OCResult oc;  // at the chosen parameter; unset when infeasible
  std::vector<SweepRow> swept;
};

/// Largest lambda (grid in (0, 1]) meeting the constraint.
CalibrationResult calibrate_lambda(const CalibrationRequest& req);

/// Smallest half-normal scale nu (grid > 0) meeting the constraint.
CalibrationResult calibrate_nu(const CalibrationRequest& req);

CalibrationResult calibrate(CalibratedParameter parameter, const CalibrationRequest& req);

/// Sweep rows whose boundary differs between two calibrations of the same
/// grid (typically exact vs replication mode).
struct ModeDisagreement {
  double parameter = 0.0;
  bool attained_a = false;
  bool attained_b = false;
  double y_c_a = 0.0;
  double y_c_b = 0.0;
};

std::vector<ModeDisagreement> mode_disagreements(const CalibrationResult& a,
                                                 const CalibrationResult& b);

}  // namespace dynborrow
