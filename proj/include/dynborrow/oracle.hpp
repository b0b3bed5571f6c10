#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dynborrow/oc.hpp"
#include "dynborrow/posterior.hpp"
#include "dynborrow/priors.hpp"

// Reference computations that avoid the discretised prior: the MAP prior is
// integrated over the between-group SD directly, and operating
// characteristics are simulated.
namespace dynborrow::oracle {

struct QuadratureSettings {
  int node_count = 400;                       // >= 100; rounded up to whole 20-point panels
  double tau_upper_quantile = 1.0 - 1e-8;     // truncation of the heterogeneity prior
  double convergence_tolerance = 1e-6;

  void validate() const;
};

/// MAP prior density at theta, the mixture over tau of N(y1, se1^2 + 2 tau^2)
/// against the half-normal heterogeneity prior.
double map_prior_density(double theta, const StudySummary& external, const HalfNormal& het,
                         const QuadratureSettings& settings = {});

struct QuadraturePosterior {
  double success_prob = 0.0;
  double w = 0.0;
  double bayes_factor = 0.0;
  double informative_success_prob = 0.0;
  double convergence_estimate = 0.0;  // |change| in success_prob when nodes double
  bool converged = false;
  int node_count = 0;                 // nodes of the reported (doubled) evaluation
};

/// Robust MAP posterior quantities by direct integration over tau. The
/// returned values come from 2 * node_count nodes; the estimate compares
/// against node_count.
QuadraturePosterior map_posterior_quadrature(const StudySummary& target,
                                             const StudySummary& external, double sigma0_sq,
                                             const HeterogeneityPrior& het, double w0,
                                             const QuadratureSettings& settings = {},
                                             const PosteriorOptions& opts = {});

/// Probability that lambda * n1 falls in each (edges[k], edges[k+1]] under the
/// prior (target empty) or the posterior given the target summary. Edges
/// are ascending in [0, n1].
std::vector<double> ess_bin_masses(const std::optional<StudySummary>& target,
                                   const StudySummary& external, const HalfNormal& het,
                                   const std::vector<double>& edges,
                                   const QuadratureSettings& settings = {});

/// How a simulated y* is turned into a decision.
///  - GridSnapped: the success criterion is evaluated at the largest decision
///    grid value not above y* (y* inside the grid range), i.e. at the
///    resolution the boundary was searched on. Values outside the grid range
///    are evaluated directly.
///  - Continuous: evaluated at y* itself.
enum class DecisionRule { GridSnapped, Continuous };

struct MonteCarloSettings {
  std::int64_t replicates = 100000;
  std::uint64_t seed = 20240601;
  double true_effect = 0.0;
  DecisionRule rule = DecisionRule::GridSnapped;
  int threads = 1;

  void validate() const;
};

struct MonteCarloResult {
  double estimate = 0.0;  // success fraction
  double std_error = 0.0; // binomial standard error sqrt(p (1 - p) / R)
  std::int64_t successes = 0;
  std::int64_t replicates = 0;
  std::uint64_t seed = 0;
  std::string algorithm;
};

/// Simulates y* ~ N(true_effect, (2 sigma / sqrt(n))^2) and applies the
/// design's success criterion. Replicates are drawn in fixed blocks, each
/// from its own stream, so the result depends only on (seed, replicates)
/// and not on the thread count.
MonteCarloResult monte_carlo_oc(const DesignSpec& design, const MonteCarloSettings& mc);

/// Random stream used by monte_carlo_oc.
/// Block b uses std::mt19937_64 seeded with the (b + 1)-th output of
/// SplitMix64 started at `seed`; uniforms are the top 53 bits scaled by
/// 2^-53 and normals come from Box-Muller pairs (cosine then sine).
class NormalStream {
 public:
  static constexpr const char* kAlgorithm =
      "mt19937_64/splitmix64-block-seeds/box-muller";
  static constexpr std::int64_t kBlockSize = 4096;

  NormalStream(std::uint64_t seed, std::uint64_t block);
  double next();

 private:
  double uniform();

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace dynborrow::oracle
