#include "dynborrow/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dynborrow/errors.hpp"

namespace dynborrow {
namespace {

void check_moments(double mean, double variance) {
  if (!std::isfinite(mean)) throw std::invalid_argument("normal: mean must be finite");
  if (!std::isfinite(variance) || !(variance > 0.0)) {
    throw std::invalid_argument("normal: variance must be finite and > 0, got " +
                                std::to_string(variance));
  }
}

double standardize(double x, double mean, double variance) {
  if (std::isnan(x)) throw std::invalid_argument("normal: x is NaN");
  check_moments(mean, variance);
  if (std::isinf(x)) return x;
  return (x - mean) / std::sqrt(variance);
}

}  // namespace

double normal_pdf(double x, double mean, double variance) {
  const double value = normal_pdf_or_zero(x, mean, variance);
  if (value < kDensityFloor) {
    throw NumericError("normal_pdf: density underflow at x=" + std::to_string(x) +
                       " (mean " + std::to_string(mean) + ", variance " +
                       std::to_string(variance) + ")");
  }
  return value;
}

double normal_pdf_or_zero(double x, double mean, double variance) {
  if (!std::isfinite(x)) throw std::invalid_argument("normal_pdf: x must be finite");
  check_moments(mean, variance);
  const double d = x - mean;
  return std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

double normal_cdf(double x, double mean, double variance) {
  const double z = standardize(x, mean, variance);
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double normal_sf(double x, double mean, double variance) {
  const double z = standardize(x, mean, variance);
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

GaussianMixture::GaussianMixture(std::vector<NormalComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("GaussianMixture: no components");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight >= 0.0 && c.weight <= 1.0)) {
      throw std::invalid_argument("GaussianMixture: weight outside [0,1]");
    }
    check_moments(c.mean, c.variance);
    total += c.weight;
  }
  if (std::abs(total - 1.0) > kWeightTolerance) {
    throw std::invalid_argument("GaussianMixture: weights sum to " + std::to_string(total));
  }
}

double GaussianMixture::pdf(double x) const {
  double s = 0.0;
  for (const auto& c : components_) {
    const double d = x - c.mean;
    s += c.weight * std::exp(-0.5 * d * d / c.variance) /
         std::sqrt(2.0 * std::numbers::pi * c.variance);
  }
  return s;
}

double GaussianMixture::mean() const {
  double s = 0.0;
  for (const auto& c : components_) s += c.weight * c.mean;
  return s;
}

double mixture_prob_above(const GaussianMixture& mix, double threshold) {
  double p = 0.0;
  for (const auto& c : mix.components()) {
    if (c.weight == 0.0) continue;
    p += c.weight * normal_sf(threshold, c.mean, c.variance);
  }
  return std::min(1.0, p);
}

double mixture_prob_at_or_below(const GaussianMixture& mix, double threshold) {
  double p = 0.0;
  for (const auto& c : mix.components()) {
    if (c.weight == 0.0) continue;
    p += c.weight * normal_cdf(threshold, c.mean, c.variance);
  }
  return std::min(1.0, p);
}

NormalMoments precision_combine_precisions(double y_a, double prec_a, double y_b, double prec_b) {
  if (!std::isfinite(prec_a) || !std::isfinite(prec_b) || prec_a < 0.0 || prec_b < 0.0) {
    throw std::invalid_argument("precision_combine: precisions must be finite and >= 0");
  }
  const double prec = prec_a + prec_b;
  if (!(prec > 0.0)) throw std::invalid_argument("precision_combine: both sources are vague");
  // A zero-precision source contributes nothing, whatever its mean.
  const double num = (prec_a > 0.0 ? prec_a * y_a : 0.0) + (prec_b > 0.0 ? prec_b * y_b : 0.0);
  if (!std::isfinite(num)) throw std::invalid_argument("precision_combine: non-finite mean");
  return {num / prec, 1.0 / prec};
}

NormalMoments precision_combine(double y_a, double var_a, double y_b, double var_b) {
  if (!(var_a > 0.0) || !(var_b > 0.0) || !std::isfinite(var_a) || !std::isfinite(var_b)) {
    throw std::invalid_argument("precision_combine: variances must be finite and > 0");
  }
  return precision_combine_precisions(y_a, 1.0 / var_a, y_b, 1.0 / var_b);
}

}  // namespace dynborrow
