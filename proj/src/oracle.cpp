#include "dynborrow/oracle.hpp"

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <exception>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "dynborrow/errors.hpp"
#include "dynborrow/gauss.hpp"

namespace dynborrow::oracle {
namespace {

constexpr int kPanelOrder = 20;

struct Node {
  double u;       // heterogeneity-prior CDF value
  double weight;  // quadrature weight in u
};

// Composite Gauss-Legendre over u in [u_lo, u_hi] after the substitution
// u = 1 - (1 - t)^2, which tames the tau -> infinity end at u = 1.
std::vector<Node> nodes_on(double u_lo, double u_hi, int panels) {
  using Rule = boost::math::quadrature::gauss<double, kPanelOrder>;
  const auto& abscissa = Rule::abscissa();
  const auto& weights = Rule::weights();
  const double t_lo = 1.0 - std::sqrt(1.0 - u_lo);
  const double t_hi = 1.0 - std::sqrt(1.0 - u_hi);
  const double width = (t_hi - t_lo) / panels;

  std::vector<Node> nodes;
  nodes.reserve(static_cast<std::size_t>(panels) * kPanelOrder);
  auto push = [&](double t, double wt) {
    const double one_minus_t = 1.0 - t;
    nodes.push_back({1.0 - one_minus_t * one_minus_t, wt * 2.0 * one_minus_t});
  };
  for (int p = 0; p < panels; ++p) {
    const double mid = t_lo + (p + 0.5) * width;
    const double half = 0.5 * width;
    for (std::size_t k = 0; k < abscissa.size(); ++k) {
      push(mid + half * abscissa[k], half * weights[k]);
      if (abscissa[k] != 0.0) push(mid - half * abscissa[k], half * weights[k]);
    }
  }
  return nodes;
}

int panels_for(int node_count) { return (node_count + kPanelOrder - 1) / kPanelOrder; }

double tau_at(double u, const HalfNormal& het) {
  if (u <= 0.0) return 0.0;
  return het.scale * std::numbers::sqrt2 * boost::math::erf_inv(u);
}

// Nodes over the whole truncated range plus one node at the truncation
// point carrying the remaining prior mass.
std::vector<Node> full_nodes(const QuadratureSettings& s, int node_count) {
  auto nodes = nodes_on(0.0, s.tau_upper_quantile, panels_for(node_count));
  nodes.push_back({s.tau_upper_quantile, 1.0 - s.tau_upper_quantile});
  return nodes;
}

struct Integrals {
  double marginal = 0.0;        // integral of p(y* | tau) over the prior
  double success_weighted = 0.0;
};

Integrals integrate_posterior(const StudySummary& target, const StudySummary& external,
                              const HalfNormal& het, const std::vector<Node>& nodes,
                              double null_value) {
  Integrals out;
  const double target_var = target.variance();
  for (const auto& node : nodes) {
    const double tau = tau_at(node.u, het);
    const double prior_var = external.variance() + 2.0 * tau * tau;
    const double like = normal_pdf_or_zero(target.y_hat, external.y_hat, target_var + prior_var);
    const auto post = precision_combine(target.y_hat, target_var, external.y_hat, prior_var);
    out.marginal += node.weight * like;
    out.success_weighted += node.weight * like * normal_sf(null_value, post.mean, post.variance);
  }
  return out;
}

QuadraturePosterior evaluate(const StudySummary& target, const StudySummary& external,
                             double sigma0_sq, const HalfNormal& het, double w0,
                             const std::vector<Node>& nodes, const PosteriorOptions& opts) {
  const auto in = integrate_posterior(target, external, het, nodes, opts.null_value);
  if (!(in.marginal >= kDensityFloor)) {
    throw NumericError("map_posterior_quadrature: marginal likelihood underflows");
  }
  QuadraturePosterior r;
  r.bayes_factor = in.marginal / normal_pdf(target.y_hat, 0.0, target.variance() + sigma0_sq);
  if (w0 <= 0.0) {
    r.w = 0.0;
  } else if (w0 >= 1.0) {
    r.w = 1.0;
  } else {
    const double odds = r.bayes_factor * w0 / (1.0 - w0);
    r.w = odds / (1.0 + odds);
  }
  r.informative_success_prob = in.success_weighted / in.marginal;

  const auto vague = precision_combine_precisions(target.y_hat, 1.0 / target.variance(), 0.0,
                                                  1.0 / sigma0_sq);
  const double vague_mean = opts.mode == PosteriorMode::Exact ? vague.mean : target.y_hat;
  const double vague_success = normal_sf(opts.null_value, vague_mean, vague.variance);
  r.success_prob = (1.0 - r.w) * vague_success + r.w * r.informative_success_prob;
  return r;
}

const HalfNormal& require_half_normal(const HeterogeneityPrior& het) {
  validate(het);
  const auto* hn = std::get_if<HalfNormal>(&het);
  if (!hn) {
    throw UnsupportedVariant(
        "map_posterior_quadrature: point-mass heterogeneity is exact as a power prior");
  }
  return *hn;
}

}  // namespace

void QuadratureSettings::validate() const {
  if (node_count < 100) throw std::invalid_argument("QuadratureSettings: node_count must be >= 100");
  if (!(tau_upper_quantile > 0.9 && tau_upper_quantile < 1.0)) {
    throw std::invalid_argument("QuadratureSettings: tau_upper_quantile must lie in (0.9, 1)");
  }
  if (!(convergence_tolerance > 0.0)) {
    throw std::invalid_argument("QuadratureSettings: convergence_tolerance must be > 0");
  }
}

double map_prior_density(double theta, const StudySummary& external, const HalfNormal& het,
                         const QuadratureSettings& settings) {
  settings.validate();
  external.validate();
  validate(HeterogeneityPrior{het});
  double sum = 0.0;
  for (const auto& node : full_nodes(settings, settings.node_count)) {
    const double tau = tau_at(node.u, het);
    sum += node.weight * normal_pdf_or_zero(theta, external.y_hat, external.variance() + 2.0 * tau * tau);
  }
  return sum;
}

QuadraturePosterior map_posterior_quadrature(const StudySummary& target,
                                             const StudySummary& external, double sigma0_sq,
                                             const HeterogeneityPrior& het, double w0,
                                             const QuadratureSettings& settings,
                                             const PosteriorOptions& opts) {
  settings.validate();
  target.validate();
  external.validate();
  const auto& hn = require_half_normal(het);
  if (!(sigma0_sq > 0.0) || !std::isfinite(sigma0_sq)) {
    throw std::invalid_argument("map_posterior_quadrature: sigma0_sq must be > 0");
  }
  if (!(w0 >= 0.0 && w0 <= 1.0)) throw std::invalid_argument("map_posterior_quadrature: w0 outside [0,1]");

  const auto coarse = evaluate(target, external, sigma0_sq, hn, w0,
                               full_nodes(settings, settings.node_count), opts);
  auto fine = evaluate(target, external, sigma0_sq, hn, w0,
                       full_nodes(settings, 2 * settings.node_count), opts);
  fine.node_count = panels_for(2 * settings.node_count) * kPanelOrder;
  fine.convergence_estimate = std::abs(fine.success_prob - coarse.success_prob);
  fine.converged = fine.convergence_estimate <= settings.convergence_tolerance;
  return fine;
}

std::vector<double> ess_bin_masses(const std::optional<StudySummary>& target,
                                   const StudySummary& external, const HalfNormal& het,
                                   const std::vector<double>& edges,
                                   const QuadratureSettings& settings) {
  settings.validate();
  external.validate();
  validate(HeterogeneityPrior{het});
  if (target) target->validate();
  if (edges.size() < 2) throw std::invalid_argument("ess_bin_masses: need at least two edges");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (edges[k] < 0.0 || edges[k] > external.n || (k > 0 && !(edges[k] > edges[k - 1]))) {
      throw std::invalid_argument("ess_bin_masses: edges must ascend within [0, n1]");
    }
  }

  // ESS e corresponds to tau(e) = sqrt((n1 / e - 1) se1^2 / 2); larger ESS is
  // smaller tau, so bin (a, b] maps to u in [F(tau(b)), F(tau(a))).
  auto u_of_ess = [&](double e) {
    if (e <= 0.0) return 1.0;
    if (e >= external.n) return 0.0;
    return het.cdf(std::sqrt((external.n / e - 1.0) * external.variance() / 2.0));
  };
  auto integrand = [&](double u) {
    if (!target) return 1.0;
    const double tau = tau_at(u, het);
    return normal_pdf_or_zero(target->y_hat, external.y_hat,
                              target->variance() + external.variance() + 2.0 * tau * tau);
  };

  const int panels = std::max(1, panels_for(settings.node_count) / static_cast<int>(edges.size() - 1));
  std::vector<double> masses;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    double u_lo = u_of_ess(edges[k + 1]);
    double u_hi = u_of_ess(edges[k]);
    double mass = 0.0;
    if (u_hi >= 1.0) {
      // Unbounded-tau bin: truncate and give the tail its endpoint value.
      u_hi = settings.tau_upper_quantile;
      mass += (1.0 - u_hi) * integrand(u_hi);
    }
    if (u_hi > u_lo) {
      for (const auto& node : nodes_on(u_lo, u_hi, panels)) mass += node.weight * integrand(node.u);
    }
    masses.push_back(mass);
  }
  double total = 0.0;
  for (double m : masses) total += m;
  if (!(total > 0.0)) throw NumericError("ess_bin_masses: total mass underflows");
  for (double& m : masses) m /= total;
  return masses;
}

void MonteCarloSettings::validate() const {
  if (replicates < 1) throw std::invalid_argument("MonteCarloSettings: replicates must be >= 1");
  if (!std::isfinite(true_effect)) throw std::invalid_argument("MonteCarloSettings: true_effect must be finite");
  if (threads < 1) throw std::invalid_argument("MonteCarloSettings: threads must be >= 1");
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t block) {
  std::uint64_t state = seed;
  std::uint64_t value = 0;
  for (std::uint64_t i = 0; i <= block; ++i) value = splitmix64(state);
  engine_.seed(value);
}

double NormalStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NormalStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

MonteCarloResult monte_carlo_oc(const DesignSpec& design, const MonteCarloSettings& mc) {
  design.validate();
  mc.validate();
  const auto prior = PreparedPrior::from(design.prior, design.external);
  const auto opts = design.posterior_options();
  const double sd = 2.0 * design.sigma / std::sqrt(static_cast<double>(design.target_n));
  const auto& grid = design.decision_grid;

  auto direct = [&](double y) {
    return posterior(prior, design.target_at(y), design.external, opts).success_prob >=
           design.success_threshold;
  };
  std::vector<char> grid_success;
  if (mc.rule == DecisionRule::GridSnapped) {
    grid_success.reserve(grid.size());
    for (double y : grid) grid_success.push_back(direct(y) ? 1 : 0);
  }
  auto decide = [&](double y) -> bool {
    if (mc.rule == DecisionRule::GridSnapped && y >= grid.front() && y <= grid.back()) {
      const auto it = std::upper_bound(grid.begin(), grid.end(), y);
      return grid_success[static_cast<std::size_t>(it - grid.begin()) - 1] != 0;
    }
    return direct(y);
  };

  const std::int64_t blocks = (mc.replicates + NormalStream::kBlockSize - 1) / NormalStream::kBlockSize;
  std::vector<std::int64_t> block_successes(static_cast<std::size_t>(blocks), 0);
  auto run_block = [&](std::int64_t b) {
    NormalStream stream(mc.seed, static_cast<std::uint64_t>(b));
    const std::int64_t begin = b * NormalStream::kBlockSize;
    const std::int64_t end = std::min(mc.replicates, begin + NormalStream::kBlockSize);
    std::int64_t count = 0;
    for (std::int64_t r = begin; r < end; ++r) {
      if (decide(mc.true_effect + sd * stream.next())) ++count;
    }
    block_successes[static_cast<std::size_t>(b)] = count;
  };

  const auto workers = std::min<std::int64_t>(mc.threads, blocks);
  if (workers <= 1) {
    for (std::int64_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    {
      std::vector<std::jthread> pool;
      for (std::int64_t t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
          try {
            for (std::int64_t b = t; b < blocks; b += workers) run_block(b);
          } catch (...) {
            errors[static_cast<std::size_t>(t)] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  MonteCarloResult out;
  for (auto c : block_successes) out.successes += c;
  out.replicates = mc.replicates;
  out.estimate = static_cast<double>(out.successes) / static_cast<double>(mc.replicates);
  out.std_error = std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(mc.replicates));
  out.seed = mc.seed;
  out.algorithm = NormalStream::kAlgorithm;
  return out;
}

}  // namespace dynborrow::oracle
