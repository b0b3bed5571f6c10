#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "dynborrow/gauss.hpp"
#include "dynborrow/priors.hpp"

namespace dynborrow {

/// How the vague (non-borrowing) posterior component is formed.
///  - Exact: conjugate update of N(0, sigma0^2), mean (y*/s*^2) / (s*^-2 + sigma0^-2).
///  - Replication: mean y* with the same variance, as in the published
///    replication code. Kept to reproduce its tables digit for digit.
enum class PosteriorMode { Exact, Replication };

const char* to_string(PosteriorMode mode);
PosteriorMode parse_posterior_mode(std::string_view text);

struct PosteriorOptions {
  PosteriorMode mode = PosteriorMode::Exact;
  double null_value = 0.0;
};

struct PosteriorSummary {
  GaussianMixture mixture;
  double w = 0.0;             // posterior weight of the informative model
  double bayes_factor = 1.0;  // informative vs vague marginal likelihood
  std::optional<std::vector<double>> borrowing_weights;  // robust MAP only
  double success_prob = 0.0;  // P(theta* > null_value)
  PosteriorMode mode = PosteriorMode::Exact;
};

/// Posterior weight from the prior weight and the Bayes factor through the
/// odds identity w / (1 - w) = B w0 / (1 - w0). w0 = 0 and w0 = 1 are
/// absorbing.
double posterior_weight(double bayes_factor, double w0);

PosteriorSummary posterior_robust_power(const StudySummary& target, const StudySummary& external,
                                        double sigma0_sq, double lambda, double w0,
                                        const PosteriorOptions& opts = {});

PosteriorSummary posterior_robust_map(const StudySummary& target, const StudySummary& external,
                                      double sigma0_sq, const PartitionWeights& weights, double w0,
                                      const PosteriorOptions& opts = {});

double success_probability(const PosteriorSummary& post, double null_value);

/// A robust prior with its informative part reduced to either a single
/// discount or a set of partition weights, so repeated posterior
/// evaluations (grid scans, simulations) skip the prior construction.
struct PreparedPrior {
  double w0 = 0.5;
  double vague_variance = 1.0;
  std::variant<double, PartitionWeights> informative;  // lambda or h0

  static PreparedPrior from(const RobustPriorSpec& spec, const StudySummary& external);
};

PosteriorSummary posterior(const PreparedPrior& prior, const StudySummary& target,
                           const StudySummary& external, const PosteriorOptions& opts = {});

struct Histogram {
  std::vector<double> edges;   // size masses.size() + 1
  std::vector<double> masses;  // bin k covers (edges[k], edges[k + 1]]
};

/// Aggregates weights over i = 1..n (weights[0] is i = 1) into right-closed
/// bins of `bin_width` consecutive indices.
Histogram ess_histogram(std::span<const double> weights, int bin_width);

}  // namespace dynborrow
