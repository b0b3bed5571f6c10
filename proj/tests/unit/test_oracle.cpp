#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "bridging.hpp"
#include "dynborrow/errors.hpp"
#include "dynborrow/oracle.hpp"

using namespace dynborrow;
using namespace dynborrow::oracle;

namespace {

const PosteriorOptions kExact{PosteriorMode::Exact, 0.0};
const PosteriorOptions kReplication{PosteriorMode::Replication, 0.0};

MonteCarloSettings mc_at(double true_effect, std::int64_t replicates = 100000) {
  MonteCarloSettings s;
  s.true_effect = true_effect;
  s.replicates = replicates;
  return s;
}

}  // namespace

TEST_CASE("splitmix64 reference outputs") {
  std::uint64_t state = 0;
  CHECK(splitmix64(state) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(state) == 0x6e789e6aa1b965f4ULL);
  CHECK(splitmix64(state) == 0x06c45d188009454fULL);
}

TEST_CASE("normal stream has standard moments") {
  NormalStream stream(12345, 0);
  double sum = 0.0;
  double sum_sq = 0.0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) {
    const double x = stream.next();
    sum += x;
    sum_sq += x * x;
  }
  CHECK(std::abs(sum / n) < 5 * std::sqrt(1.0 / n));
  CHECK(std::abs(sum_sq / n - 1.0) < 5 * std::sqrt(2.0 / n));
}

TEST_CASE("normal streams differ between blocks and repeat for the same block") {
  NormalStream a(1, 0);
  NormalStream b(1, 1);
  NormalStream c(1, 0);
  const double a0 = a.next();
  CHECK(a0 != b.next());
  CHECK(a0 == c.next());
}

TEST_CASE("integrated MAP prior density is a density") {
  double total = 0.0;
  const double step = 0.5;
  for (double theta = -3000.0; theta <= 3000.0; theta += step) {
    total += map_prior_density(theta, bridging::external(), HalfNormal{34}) * step;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("quadrature with a vanishing scale reduces to full borrowing") {
  for (double y : {0.0, 50.0, 100.0}) {
    const auto quad = map_posterior_quadrature(bridging::target(y), bridging::external(), bridging::sigma0_sq(),
                                               HalfNormal{1e-6}, 0.5, {}, kExact);
    const auto pow = posterior_robust_power(bridging::target(y), bridging::external(), bridging::sigma0_sq(), 1.0, 0.5,
                                            kExact);
    CHECK(std::abs(quad.success_prob - pow.success_prob) <= 1e-6);
  }
}

TEST_CASE("quadrature with w0 = 0 is the vague posterior") {
  const auto quad = map_posterior_quadrature(bridging::target(30), bridging::external(), bridging::sigma0_sq(),
                                             HalfNormal{34}, 0.0, {}, kExact);
  const auto vague = posterior_robust_power(bridging::target(30), bridging::external(), bridging::sigma0_sq(), 1.0, 0.0,
                                            kExact);
  CHECK(quad.w == 0.0);
  CHECK(quad.success_prob == doctest::Approx(vague.success_prob).epsilon(1e-14));
}

TEST_CASE("quadrature is self-converged at the default settings") {
  for (double nu : {34.0, 46.0}) {
    for (double y : {0.0, 25.0, 50.0, 75.0, 100.0}) {
      const auto quad = map_posterior_quadrature(bridging::target(y), bridging::external(), bridging::sigma0_sq(),
                                                 HalfNormal{nu}, 0.5, {}, kReplication);
      CHECK(quad.converged);
      CHECK(quad.convergence_estimate < 1e-6);
      CHECK(quad.node_count >= 800);
      CHECK(quad.w / (1 - quad.w) == doctest::Approx(quad.bayes_factor).epsilon(1e-10));
    }
  }
}

TEST_CASE("quadrature agrees with the discretised posterior at scale 34, y* = 50") {
  const auto h0 = prior_partition_weights(HalfNormal{34}, 800, 404.01);
  const auto closed = posterior_robust_map(bridging::target(50), bridging::external(), bridging::sigma0_sq(), h0, 0.5,
                                           kExact);
  const auto quad = map_posterior_quadrature(bridging::target(50), bridging::external(), bridging::sigma0_sq(),
                                             HalfNormal{34}, 0.5, {}, kExact);
  CHECK(std::abs(closed.success_prob - quad.success_prob) <= 1e-3);
  CHECK(quad.bayes_factor == doctest::Approx(closed.bayes_factor).epsilon(1e-2));
}

TEST_CASE("quadrature argument checks") {
  CHECK_THROWS_AS(map_posterior_quadrature(bridging::target(0), bridging::external(), bridging::sigma0_sq(),
                                           PointMass{1.0}, 0.5),
                  UnsupportedVariant);
  QuadratureSettings few;
  few.node_count = 99;
  CHECK_THROWS_AS(few.validate(), std::invalid_argument);
  QuadratureSettings low;
  low.tau_upper_quantile = 0.9;
  CHECK_THROWS_AS(low.validate(), std::invalid_argument);
  CHECK_NOTHROW(QuadratureSettings{}.validate());
}

TEST_CASE("integrated borrowing histograms") {
  const HalfNormal het{34};
  const std::vector<double> edges{0, 100, 200, 300, 400, 500, 600, 700, 800};
  const auto h0 = prior_partition_weights(het, 800, 404.01);
  const auto prior_closed = ess_histogram(h0.mass, 100).masses;
  const auto prior_quad = ess_bin_masses(std::nullopt, bridging::external(), het, edges);
  REQUIRE(prior_quad.size() == 8);
  for (std::size_t k = 0; k < 8; ++k) CHECK(prior_quad[k] == doctest::Approx(prior_closed[k]).epsilon(1e-9));

  for (double y : {0.0, 50.0, 100.0}) {
    const auto post = posterior_robust_map(bridging::target(y), bridging::external(), bridging::sigma0_sq(), h0, 0.5);
    const auto closed = ess_histogram(*post.borrowing_weights, 100).masses;
    const auto quad = ess_bin_masses(bridging::target(y), bridging::external(), het, edges);
    double total = 0.0;
    for (std::size_t k = 0; k < 8; ++k) {
      CHECK(std::abs(quad[k] - closed[k]) <= 1e-3);
      total += quad[k];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("Monte-Carlo with a zero threshold always succeeds") {
  auto d = bridging::power_design(0.5, 0.185, PosteriorMode::Replication);
  d.success_threshold = 0.0;
  const auto r = monte_carlo_oc(d, mc_at(0.0, 20000));
  CHECK(r.estimate == 1.0);
  CHECK(r.successes == 20000);
}

TEST_CASE("Monte-Carlo at the boundary succeeds half the time") {
  const auto d = bridging::power_design(0.5, 0.185, PosteriorMode::Replication);
  const auto r = monte_carlo_oc(d, mc_at(49.0, 400000));
  CHECK(std::abs(r.estimate - 0.5) <= 4.0 * std::sqrt(0.25 / 400000));
}

TEST_CASE("Monte-Carlo type I error and power match the closed form") {
  const auto d = bridging::power_design(0.5, 0.185, PosteriorMode::Replication);
  const auto oc = operating_characteristics(d);
  const auto alpha = monte_carlo_oc(d, mc_at(0.0));
  CHECK(std::abs(alpha.estimate - oc.alpha) <= 3.0 * std::sqrt(oc.alpha * (1 - oc.alpha) / 1e5));
  const auto power = monte_carlo_oc(d, mc_at(100.0));
  CHECK(std::abs(power.estimate - oc.power) <= 3.0 * std::sqrt(oc.power * (1 - oc.power) / 1e5));
  CHECK(alpha.std_error == doctest::Approx(std::sqrt(alpha.estimate * (1 - alpha.estimate) / 1e5)));
  CHECK(alpha.algorithm == NormalStream::kAlgorithm);
}

// Without snapping to the grid the decision uses the continuous boundary,
// which lies below the grid value; the simulation then tracks that boundary.
TEST_CASE("continuous decisions follow the continuous boundary") {
  const auto d = bridging::power_design(0.5, 0.185, PosteriorMode::Replication);
  const auto prior = PreparedPrior::from(d.prior, d.external);
  auto success = [&](double y) { return posterior(prior, d.target_at(y), d.external, d.posterior_options()).success_prob; };
  double lo = 40.0;
  double hi = 49.0;
  for (int k = 0; k < 80; ++k) {
    const double mid = 0.5 * (lo + hi);
    (success(mid) >= 0.95 ? hi : lo) = mid;
  }
  CHECK(hi < 49.0);
  CHECK(hi > 48.0);
  auto s = mc_at(0.0);
  s.rule = DecisionRule::Continuous;
  const auto r = monte_carlo_oc(d, s);
  const double expected = type_one_error(hi, 150, 350);
  CHECK(std::abs(r.estimate - expected) <= 3.0 * std::sqrt(expected * (1 - expected) / 1e5));
}

TEST_CASE("Monte-Carlo is reproducible and independent of the thread count") {
  const auto d = bridging::map_design(0.5, 34, PosteriorMode::Replication);
  auto s = mc_at(100.0, 30000);
  const auto a = monte_carlo_oc(d, s);
  const auto b = monte_carlo_oc(d, s);
  s.threads = 3;
  const auto c = monte_carlo_oc(d, s);
  CHECK(a.successes == b.successes);
  CHECK(a.successes == c.successes);
  CHECK(a.estimate == c.estimate);
  s.seed += 1;
  CHECK(monte_carlo_oc(d, s).successes != a.successes);
}

TEST_CASE("Monte-Carlo settings validation") {
  MonteCarloSettings s;
  s.replicates = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.replicates = 10;
  s.threads = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}
