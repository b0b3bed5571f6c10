#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dynborrow/gauss.hpp"

namespace dynborrow {

/// Summary statistics of one data source: subject count, estimated
/// treatment effect and its standard error.
struct StudySummary {
  int n = 1;
  double y_hat = 0.0;
  double se = 1.0;

  double variance() const { return se * se; }
  void validate() const;
};

/// Heterogeneity prior: between-group SD known exactly.
struct PointMass {
  double tau = 0.0;
};

/// Heterogeneity prior: half-normal on tau >= 0 with the given scale,
/// CDF F(tau) = 2 Phi(tau / scale) - 1.
struct HalfNormal {
  double scale = 1.0;

  double cdf(double tau) const;
  /// 1 - cdf(tau), accurate in the upper tail.
  double sf(double tau) const;
};

using HeterogeneityPrior = std::variant<PointMass, HalfNormal>;

void validate(const HeterogeneityPrior& het);

/// Power prior with discount lambda in (0, 1].
struct PowerPrior {
  double lambda = 1.0;
};

/// Meta-analytic-predictive prior built from one external source.
struct MapPrior {
  HeterogeneityPrior heterogeneity = HalfNormal{};
};

using InformativePrior = std::variant<PowerPrior, MapPrior>;

/// Two-component robust prior: (1 - w0) N(0, vague_variance) plus w0 times
/// the informative prior.
struct RobustPriorSpec {
  double w0 = 0.5;
  double vague_variance = 1.0;
  InformativePrior informative = PowerPrior{};

  void validate() const;
};

/// Prior mass of the effective sample size lambda * n1 over a partition of
/// (0, n1] into cells of width 1 / cells_per_unit. Cell j (zero-based) is
/// ((j) / k, (j + 1) / k] with k = cells_per_unit; mass[0] absorbs the
/// unbounded tail tau >= tau_1.
struct PartitionWeights {
  int n1 = 1;
  int cells_per_unit = 1;
  std::vector<double> mass;

  std::size_t size() const { return mass.size(); }
  /// Upper end of cell j on the effective-sample-size scale.
  double ess(std::size_t j) const {
    return static_cast<double>(j + 1) / static_cast<double>(cells_per_unit);
  }
  /// Point mass on the cell whose upper end is `ess` (unit partition).
  static PartitionWeights point_mass(int n1, int ess);
};

/// Discount implied by a known between-group SD:
/// lambda = 1 / (2 n1 tau^2 / sigma1_sq + 1).
double tau_to_lambda(double tau, int n1, double sigma1_sq);

/// tau_i = sqrt((n1 / i - 1) * s1_sq / 2) for the cell boundary i (i in
/// [1, n1]); i may be fractional for refined partitions.
double partition_tau(double i, int n1, double s1_sq);

/// Cell boundaries ordered [tau_{n1}, ..., tau_1] (ascending; tau_{n1} = 0).
std::vector<double> partition_taus(int n1, double s1_sq);

/// Prior cell masses h0 for a half-normal heterogeneity prior.
/// Throws UnsupportedVariant for a point-mass prior, which maps to a single
/// power prior through tau_to_lambda instead.
PartitionWeights prior_partition_weights(const HeterogeneityPrior& het, int n1, double s1_sq,
                                         int cells_per_unit = 1);

inline constexpr double kDefaultUnboundedCellWarning = 0.05;

/// Warning text when the unbounded cell (effective sample size <= 1) holds
/// more than `threshold` of the prior mass; such priors are very
/// conservative.
std::optional<std::string> unbounded_cell_warning(const PartitionWeights& weights,
                                                  double threshold = kDefaultUnboundedCellWarning);

/// Warning text when se^2 differs from sigma1_sq / n1 by more than rel_tol.
/// The library always takes the standard error as primitive.
std::optional<std::string> external_consistency_warning(const StudySummary& external,
                                                        double sigma1_sq,
                                                        double rel_tol = 1e-6);

/// Discretised MAP prior: component j has weight mass[j], mean y_hat and
/// variance (n1 / ess_j) * se^2.
GaussianMixture map_prior_approx(const StudySummary& external, const PartitionWeights& weights);

/// Discount used for a point-mass heterogeneity prior, taking se^2 as the
/// primitive (sigma1^2 = n1 * se^2).
double point_mass_lambda(const PointMass& pm, const StudySummary& external);

/// The robust prior as a mixture. Zero-weight parts are omitted, so w0 = 0
/// gives the vague prior alone and w0 = 1 the informative prior alone.
GaussianMixture build_robust_prior(const RobustPriorSpec& spec, const StudySummary& external);

}  // namespace dynborrow
