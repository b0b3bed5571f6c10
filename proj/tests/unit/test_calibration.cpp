#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "bridging.hpp"
#include "dynborrow/calibration.hpp"

using namespace dynborrow;

namespace {

CalibrationRequest request(double w0, std::vector<double> grid, PosteriorMode mode, double alpha = 0.2) {
  CalibrationRequest req;
  req.design = bridging::power_design(w0, 1.0, mode);
  req.w0 = w0;
  req.alpha_target = alpha;
  req.parameter_grid = std::move(grid);
  return req;
}

void check_dominance(const CalibrationResult& r, double alpha_target) {
  REQUIRE(r.feasible);
  for (const auto& row : r.swept) {
    const bool more_borrowing = r.parameter == CalibratedParameter::Lambda ? row.parameter > r.chosen_parameter
                                                                           : row.parameter < r.chosen_parameter;
    if (more_borrowing) CHECK_FALSE(row.feasible);
    if (row.feasible) CHECK(row.alpha <= alpha_target);
  }
}

}  // namespace

TEST_CASE("a vacuous alpha target picks the most borrowing") {
  const auto lam = calibrate_lambda(request(0.5, {0.1, 0.5, 0.9}, PosteriorMode::Exact, 1.0));
  CHECK(lam.feasible);
  CHECK(lam.chosen_parameter == 0.9);
  const auto nu = calibrate_nu(request(0.5, {5, 10, 20}, PosteriorMode::Exact, 1.0));
  CHECK(nu.feasible);
  CHECK(nu.chosen_parameter == 5);
}

TEST_CASE("published calibrations in replication mode") {
  const auto l03 = calibrate_lambda(request(0.3, bridging::lambda_grid(), PosteriorMode::Replication));
  CHECK(l03.chosen_parameter == 1.0);
  const auto l05 = calibrate_lambda(request(0.5, bridging::lambda_grid(), PosteriorMode::Replication));
  CHECK(l05.chosen_parameter == 148 / 800.0);
  CHECK(std::round(l05.chosen_parameter * 1000) / 1000 == doctest::Approx(0.185));
  const auto l07 = calibrate_lambda(request(0.7, bridging::lambda_grid(), PosteriorMode::Replication));
  CHECK(std::round(l07.chosen_parameter * 1000) / 1000 == doctest::Approx(0.144));

  const auto n05 = calibrate_nu(request(0.5, bridging::nu_grid(), PosteriorMode::Replication));
  CHECK(n05.chosen_parameter == 34);
  const auto n07 = calibrate_nu(request(0.7, bridging::nu_grid(), PosteriorMode::Replication));
  CHECK(n07.chosen_parameter == 46);

  for (const auto* r : {&l03, &l05, &l07}) {
    check_dominance(*r, 0.2);
    CHECK(r->swept.size() == 800);
  }
  for (const auto* r : {&n05, &n07}) {
    check_dominance(*r, 0.2);
    CHECK(r->swept.size() == 60);
  }
  CHECK(l05.oc.y_c == n05.oc.y_c);
  CHECK(l05.oc.alpha == n05.oc.alpha);
  CHECK(l05.oc.power == n05.oc.power);
  CHECK(l07.oc.y_c == n07.oc.y_c);
  CHECK(l07.oc.alpha == n07.oc.alpha);
  CHECK(l07.oc.power == n07.oc.power);
}

TEST_CASE("exact-mode calibration flags rows where the modes disagree") {
  const auto repl = calibrate_nu(request(0.5, bridging::nu_grid(), PosteriorMode::Replication));
  const auto exact = calibrate_nu(request(0.5, bridging::nu_grid(), PosteriorMode::Exact));
  CHECK(exact.mode == PosteriorMode::Exact);
  CHECK(exact.chosen_parameter == 34);
  CHECK(std::abs(exact.oc.y_c - 49.0) <= 1.0);
  const auto diffs = mode_disagreements(repl, exact);
  for (const auto& d : diffs) {
    CHECK((d.attained_a != d.attained_b || d.y_c_a != d.y_c_b));
    if (d.attained_a && d.attained_b) CHECK(std::abs(d.y_c_a - d.y_c_b) <= 1.0);
  }
  std::size_t expected = 0;
  for (std::size_t k = 0; k < repl.swept.size(); ++k) {
    if (repl.swept[k].y_c != exact.swept[k].y_c || repl.swept[k].attained != exact.swept[k].attained) ++expected;
  }
  CHECK(diffs.size() == expected);
}

TEST_CASE("calibration sweeps are deterministic and independent of the thread count") {
  auto req = request(0.5, {0.1, 0.15, 0.185, 0.2, 0.3, 0.5, 1.0}, PosteriorMode::Replication);
  const auto a = calibrate_lambda(req);
  req.threads = 3;
  const auto b = calibrate_lambda(req);
  REQUIRE(a.swept.size() == b.swept.size());
  for (std::size_t k = 0; k < a.swept.size(); ++k) {
    CHECK(a.swept[k].parameter == b.swept[k].parameter);
    CHECK(a.swept[k].y_c == b.swept[k].y_c);
    CHECK(a.swept[k].alpha == b.swept[k].alpha);
    CHECK(a.swept[k].boundary_w == b.swept[k].boundary_w);
  }
  CHECK(a.chosen_parameter == b.chosen_parameter);
}

TEST_CASE("an unreachable alpha target is reported as infeasible") {
  const auto r = calibrate_lambda(request(0.5, {0.5, 1.0}, PosteriorMode::Exact, 1e-6));
  CHECK_FALSE(r.feasible);
  CHECK(r.swept.size() == 2);
  CHECK_FALSE(r.oc.attained);
}

TEST_CASE("calibration request validation") {
  CHECK_THROWS_AS(calibrate_lambda(request(0.5, {}, PosteriorMode::Exact)), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_lambda(request(0.5, {0.5, 0.2}, PosteriorMode::Exact)), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_lambda(request(0.5, {0.5, 1.5}, PosteriorMode::Exact)), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_lambda(request(0.5, {0.0, 0.5}, PosteriorMode::Exact)), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_nu(request(0.5, {-1.0, 5.0}, PosteriorMode::Exact)), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_nu(request(0.5, {1.0}, PosteriorMode::Exact, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(calibrate_nu(request(1.5, {1.0}, PosteriorMode::Exact)), std::invalid_argument);
  auto req = request(0.5, {1.0}, PosteriorMode::Exact);
  req.threads = 0;
  CHECK_THROWS_AS(calibrate_nu(req), std::invalid_argument);
}

TEST_CASE("parameter names") {
  CHECK(std::string(to_string(CalibratedParameter::Lambda)) == "lambda");
  CHECK(std::string(to_string(CalibratedParameter::Nu)) == "nu");
}
