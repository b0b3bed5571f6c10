#include "dynborrow/posterior.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dynborrow/errors.hpp"

namespace dynborrow {
namespace {

void check_common(const StudySummary& target, const StudySummary& external, double sigma0_sq,
                  double w0) {
  target.validate();
  external.validate();
  if (!std::isfinite(sigma0_sq) || !(sigma0_sq > 0.0)) {
    throw std::invalid_argument("posterior: sigma0_sq must be finite and > 0");
  }
  if (!(w0 >= 0.0 && w0 <= 1.0)) throw std::invalid_argument("posterior: w0 must lie in [0,1]");
}

NormalComponent vague_component(const StudySummary& target, double sigma0_sq, double weight,
                                PosteriorMode mode) {
  const auto post = precision_combine_precisions(target.y_hat, 1.0 / target.variance(), 0.0,
                                                 1.0 / sigma0_sq);
  const double mean = mode == PosteriorMode::Exact ? post.mean : target.y_hat;
  return {weight, mean, post.variance};
}

double vague_marginal(const StudySummary& target, double sigma0_sq) {
  return normal_pdf(target.y_hat, 0.0, target.variance() + sigma0_sq);
}

}  // namespace

const char* to_string(PosteriorMode mode) {
  return mode == PosteriorMode::Exact ? "exact" : "replication";
}

PosteriorMode parse_posterior_mode(std::string_view text) {
  if (text == "exact") return PosteriorMode::Exact;
  if (text == "replication") return PosteriorMode::Replication;
  throw std::invalid_argument("unknown mode '" + std::string(text) + "' (exact|replication)");
}

double posterior_weight(double bayes_factor, double w0) {
  if (!(bayes_factor > 0.0) || !std::isfinite(bayes_factor)) {
    throw NumericError("posterior_weight: Bayes factor must be positive and finite");
  }
  if (w0 <= 0.0) return 0.0;
  if (w0 >= 1.0) return 1.0;
  const double odds = bayes_factor * w0 / (1.0 - w0);
  return odds / (odds + 1.0);
}

PosteriorSummary posterior_robust_power(const StudySummary& target, const StudySummary& external,
                                        double sigma0_sq, double lambda, double w0,
                                        const PosteriorOptions& opts) {
  check_common(target, external, sigma0_sq, w0);
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("posterior_robust_power: lambda must lie in (0,1]");
  }
  const double prior_var = external.variance() / lambda;
  const double numerator = normal_pdf(target.y_hat, external.y_hat, prior_var + target.variance());
  const double bf = numerator / vague_marginal(target, sigma0_sq);
  const double w = posterior_weight(bf, w0);

  std::vector<NormalComponent> comps;
  if (w < 1.0) comps.push_back(vague_component(target, sigma0_sq, 1.0 - w, opts.mode));
  if (w > 0.0) {
    const auto inf = precision_combine(target.y_hat, target.variance(), external.y_hat, prior_var);
    comps.push_back({w, inf.mean, inf.variance});
  }
  PosteriorSummary out{GaussianMixture(std::move(comps)), w, bf, std::nullopt, 0.0, opts.mode};
  out.success_prob = success_probability(out, opts.null_value);
  return out;
}

PosteriorSummary posterior_robust_map(const StudySummary& target, const StudySummary& external,
                                      double sigma0_sq, const PartitionWeights& weights, double w0,
                                      const PosteriorOptions& opts) {
  check_common(target, external, sigma0_sq, w0);
  if (weights.n1 != external.n) {
    throw std::invalid_argument("posterior_robust_map: partition n1 " + std::to_string(weights.n1) +
                                " does not match external n " + std::to_string(external.n));
  }
  const std::size_t cells = weights.size();
  if (cells != static_cast<std::size_t>(weights.n1) * weights.cells_per_unit) {
    throw std::invalid_argument("posterior_robust_map: partition has the wrong number of cells");
  }

  std::vector<double> h(cells);
  double total = 0.0;
  for (std::size_t j = 0; j < cells; ++j) {
    if (weights.mass[j] < 0.0) throw std::invalid_argument("posterior_robust_map: negative h0");
    if (weights.mass[j] == 0.0) continue;
    const double var = external.n / weights.ess(j) * external.variance();
    h[j] = weights.mass[j] * normal_pdf_or_zero(target.y_hat, external.y_hat, var + target.variance());
    total += h[j];
  }
  if (!(total >= kDensityFloor)) {
    throw NumericError("posterior_robust_map: informative marginal likelihood underflows");
  }
  for (double& x : h) x /= total;

  const double bf = total / vague_marginal(target, sigma0_sq);
  const double w = posterior_weight(bf, w0);

  std::vector<NormalComponent> comps;
  comps.reserve(cells + 1);
  if (w < 1.0) comps.push_back(vague_component(target, sigma0_sq, 1.0 - w, opts.mode));
  if (w > 0.0) {
    for (std::size_t j = 0; j < cells; ++j) {
      if (h[j] == 0.0) continue;
      const auto inf = precision_combine(target.y_hat, target.variance(), external.y_hat,
                                         external.n / weights.ess(j) * external.variance());
      comps.push_back({w * h[j], inf.mean, inf.variance});
    }
  }
  PosteriorSummary out{GaussianMixture(std::move(comps)), w, bf, std::move(h), 0.0, opts.mode};
  out.success_prob = success_probability(out, opts.null_value);
  return out;
}

double success_probability(const PosteriorSummary& post, double null_value) {
  return mixture_prob_above(post.mixture, null_value);
}

PreparedPrior PreparedPrior::from(const RobustPriorSpec& spec, const StudySummary& external) {
  spec.validate();
  external.validate();
  PreparedPrior p;
  p.w0 = spec.w0;
  p.vague_variance = spec.vague_variance;
  if (const auto* pow = std::get_if<PowerPrior>(&spec.informative)) {
    p.informative = pow->lambda;
  } else {
    const auto& het = std::get<MapPrior>(spec.informative).heterogeneity;
    if (const auto* pm = std::get_if<PointMass>(&het)) {
      p.informative = point_mass_lambda(*pm, external);
    } else {
      p.informative = prior_partition_weights(het, external.n, external.variance());
    }
  }
  return p;
}

PosteriorSummary posterior(const PreparedPrior& prior, const StudySummary& target,
                           const StudySummary& external, const PosteriorOptions& opts) {
  if (const auto* lambda = std::get_if<double>(&prior.informative)) {
    return posterior_robust_power(target, external, prior.vague_variance, *lambda, prior.w0, opts);
  }
  return posterior_robust_map(target, external, prior.vague_variance,
                              std::get<PartitionWeights>(prior.informative), prior.w0, opts);
}

Histogram ess_histogram(std::span<const double> weights, int bin_width) {
  if (bin_width < 1) throw std::invalid_argument("ess_histogram: bin_width must be >= 1");
  if (weights.empty()) throw std::invalid_argument("ess_histogram: no weights");
  double total = 0.0;
  for (double x : weights) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument("ess_histogram: weights must be finite and >= 0");
    }
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-10) {
    throw std::invalid_argument("ess_histogram: weights sum to " + std::to_string(total));
  }
  const std::size_t bw = static_cast<std::size_t>(bin_width);
  const std::size_t bins = (weights.size() + bw - 1) / bw;
  Histogram hist;
  hist.masses.assign(bins, 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) hist.masses[i / bw] += weights[i];
  hist.edges.reserve(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) hist.edges.push_back(static_cast<double>(k * bw));
  return hist;
}

}  // namespace dynborrow
