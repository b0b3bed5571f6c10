#include "dynborrow/priors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "dynborrow/errors.hpp"
#include "overloaded.hpp"

namespace dynborrow {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

using detail::Overloaded;

void append_informative(std::vector<NormalComponent>& out, double weight,
                        const InformativePrior& informative, const StudySummary& external) {
  std::visit(Overloaded{
                 [&](const PowerPrior& p) {
                   out.push_back({weight, external.y_hat, external.variance() / p.lambda});
                 },
                 [&](const MapPrior& m) {
                   if (const auto* pm = std::get_if<PointMass>(&m.heterogeneity)) {
                     out.push_back({weight, external.y_hat,
                                    external.variance() / point_mass_lambda(*pm, external)});
                     return;
                   }
                   const auto weights = prior_partition_weights(m.heterogeneity, external.n,
                                                                external.variance());
                   const auto approx = map_prior_approx(external, weights);
                   for (const auto& c : approx.components()) {
                     out.push_back({weight * c.weight, c.mean, c.variance});
                   }
                 },
             },
             informative);
}

}  // namespace

void StudySummary::validate() const {
  require(n >= 1, "StudySummary: n must be >= 1");
  require(std::isfinite(y_hat), "StudySummary: y_hat must be finite");
  require(std::isfinite(se) && se > 0.0, "StudySummary: se must be finite and > 0");
}

double HalfNormal::cdf(double tau) const {
  if (tau <= 0.0) return 0.0;
  if (std::isinf(tau)) return 1.0;
  return std::erf(tau / (scale * std::numbers::sqrt2));
}

double HalfNormal::sf(double tau) const {
  if (tau <= 0.0) return 1.0;
  if (std::isinf(tau)) return 0.0;
  return std::erfc(tau / (scale * std::numbers::sqrt2));
}

void validate(const HeterogeneityPrior& het) {
  std::visit(Overloaded{
                 [](const PointMass& p) {
                   require(std::isfinite(p.tau) && p.tau >= 0.0, "PointMass: tau must be >= 0");
                 },
                 [](const HalfNormal& h) {
                   require(std::isfinite(h.scale) && h.scale > 0.0,
                           "HalfNormal: scale must be finite and > 0");
                 },
             },
             het);
}

void RobustPriorSpec::validate() const {
  require(w0 >= 0.0 && w0 <= 1.0, "RobustPriorSpec: w0 must lie in [0,1]");
  require(std::isfinite(vague_variance) && vague_variance > 0.0,
          "RobustPriorSpec: vague_variance must be finite and > 0");
  if (const auto* p = std::get_if<PowerPrior>(&informative)) {
    require(p->lambda > 0.0 && p->lambda <= 1.0, "RobustPriorSpec: lambda must lie in (0,1]");
  } else {
    dynborrow::validate(std::get<MapPrior>(informative).heterogeneity);
  }
}

PartitionWeights PartitionWeights::point_mass(int n1, int ess) {
  require(n1 >= 1 && ess >= 1 && ess <= n1, "PartitionWeights::point_mass: ess outside [1, n1]");
  PartitionWeights w;
  w.n1 = n1;
  w.mass.assign(static_cast<std::size_t>(n1), 0.0);
  w.mass[static_cast<std::size_t>(ess - 1)] = 1.0;
  return w;
}

double tau_to_lambda(double tau, int n1, double sigma1_sq) {
  require(std::isfinite(tau) || tau == std::numeric_limits<double>::infinity(),
          "tau_to_lambda: tau is NaN");
  require(tau >= 0.0, "tau_to_lambda: tau must be >= 0");
  require(n1 >= 1, "tau_to_lambda: n1 must be >= 1");
  require(std::isfinite(sigma1_sq) && sigma1_sq > 0.0, "tau_to_lambda: sigma1_sq must be > 0");
  if (std::isinf(tau)) return 0.0;
  return 1.0 / (2.0 * n1 * tau * tau / sigma1_sq + 1.0);
}

double partition_tau(double i, int n1, double s1_sq) {
  require(n1 >= 1, "partition_tau: n1 must be >= 1");
  require(std::isfinite(s1_sq) && s1_sq > 0.0, "partition_tau: s1_sq must be > 0");
  require(i >= 0.0 && i <= n1, "partition_tau: index outside [0, n1]");
  if (i == 0.0) return std::numeric_limits<double>::infinity();
  if (i == static_cast<double>(n1)) return 0.0;
  return std::sqrt((n1 / i - 1.0) * s1_sq / 2.0);
}

std::vector<double> partition_taus(int n1, double s1_sq) {
  require(n1 >= 1, "partition_taus: n1 must be >= 1");
  std::vector<double> taus;
  taus.reserve(static_cast<std::size_t>(n1));
  for (int i = n1; i >= 1; --i) taus.push_back(partition_tau(i, n1, s1_sq));
  return taus;
}

PartitionWeights prior_partition_weights(const HeterogeneityPrior& het, int n1, double s1_sq,
                                         int cells_per_unit) {
  validate(het);
  if (std::holds_alternative<PointMass>(het)) {
    throw UnsupportedVariant(
        "prior_partition_weights: point-mass heterogeneity maps to a single power prior; "
        "use point_mass_lambda");
  }
  require(n1 >= 1, "prior_partition_weights: n1 must be >= 1");
  require(cells_per_unit >= 1, "prior_partition_weights: cells_per_unit must be >= 1");
  require(std::isfinite(s1_sq) && s1_sq > 0.0, "prior_partition_weights: s1_sq must be > 0");

  const auto& hn = std::get<HalfNormal>(het);
  PartitionWeights w;
  w.n1 = n1;
  w.cells_per_unit = cells_per_unit;
  const std::size_t cells = static_cast<std::size_t>(n1) * static_cast<std::size_t>(cells_per_unit);
  w.mass.resize(cells);

  // Differences of survival functions keep the upper-tail cells accurate.
  double upper_sf = 0.0;  // sf(tau_0 = +inf)
  for (std::size_t j = 0; j < cells; ++j) {
    const double lower_sf = hn.sf(partition_tau(w.ess(j), n1, s1_sq));
    w.mass[j] = lower_sf - upper_sf;
    upper_sf = lower_sf;
  }
  return w;
}

std::optional<std::string> unbounded_cell_warning(const PartitionWeights& weights,
                                                  double threshold) {
  if (weights.mass.empty() || weights.mass.front() <= threshold) return std::nullopt;
  return "prior mass " + std::to_string(weights.mass.front()) +
         " on effective sample size <= " + std::to_string(weights.ess(0)) +
         " exceeds " + std::to_string(threshold) + "; the informative component is very conservative";
}

std::optional<std::string> external_consistency_warning(const StudySummary& external,
                                                        double sigma1_sq, double rel_tol) {
  external.validate();
  require(sigma1_sq > 0.0, "external_consistency_warning: sigma1_sq must be > 0");
  const double implied = sigma1_sq / external.n;
  if (std::abs(implied - external.variance()) <= rel_tol * external.variance()) return std::nullopt;
  return "external se^2 = " + std::to_string(external.variance()) + " but sigma1^2 / n1 = " +
         std::to_string(implied) + "; the standard error is used as given";
}

GaussianMixture map_prior_approx(const StudySummary& external, const PartitionWeights& weights) {
  external.validate();
  if (weights.n1 != external.n) {
    throw std::invalid_argument("map_prior_approx: partition n1 " + std::to_string(weights.n1) +
                                " does not match external n " + std::to_string(external.n));
  }
  require(weights.size() == static_cast<std::size_t>(weights.n1) * weights.cells_per_unit,
          "map_prior_approx: partition has the wrong number of cells");
  std::vector<NormalComponent> comps;
  comps.reserve(weights.size());
  for (std::size_t j = 0; j < weights.size(); ++j) {
    comps.push_back({weights.mass[j], external.y_hat,
                     external.n / weights.ess(j) * external.variance()});
  }
  return GaussianMixture(std::move(comps));
}

double point_mass_lambda(const PointMass& pm, const StudySummary& external) {
  external.validate();
  return tau_to_lambda(pm.tau, external.n, external.n * external.variance());
}

GaussianMixture build_robust_prior(const RobustPriorSpec& spec, const StudySummary& external) {
  spec.validate();
  external.validate();
  std::vector<NormalComponent> comps;
  if (spec.w0 < 1.0) comps.push_back({1.0 - spec.w0, 0.0, spec.vague_variance});
  if (spec.w0 > 0.0) append_informative(comps, spec.w0, spec.informative, external);
  return GaussianMixture(std::move(comps));
}

}  // namespace dynborrow
