#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dynborrow {

// Densities below this floor are treated as underflow.
inline constexpr double kDensityFloor = 1e-300;

/// Normal density at x with the given mean and variance.
/// Throws std::invalid_argument for non-finite inputs or variance <= 0 and
/// NumericError when the density falls below kDensityFloor.
double normal_pdf(double x, double mean, double variance);

/// As normal_pdf, but an underflowing density is returned as zero. For sums
/// whose individual terms may vanish; callers check the total.
double normal_pdf_or_zero(double x, double mean, double variance);

/// Normal CDF. x may be +/-infinity; mean and variance must be finite.
double normal_cdf(double x, double mean, double variance);

/// Upper tail 1 - normal_cdf, evaluated without cancellation.
double normal_sf(double x, double mean, double variance);

struct NormalComponent {
  double weight = 1.0;
  double mean = 0.0;
  double variance = 1.0;
};

/// Finite mixture of normals. Weights sum to one (within 1e-12), every
/// variance is positive and there is at least one component; the
/// constructor enforces this.
class GaussianMixture {
 public:
  static constexpr double kWeightTolerance = 1e-12;

  explicit GaussianMixture(std::vector<NormalComponent> components);

  std::span<const NormalComponent> components() const { return components_; }
  std::size_t size() const { return components_.size(); }
  const NormalComponent& operator[](std::size_t i) const { return components_[i]; }

  double pdf(double x) const;
  double mean() const;

 private:
  std::vector<NormalComponent> components_;
};

/// P(X > threshold) for X drawn from the mixture.
double mixture_prob_above(const GaussianMixture& mix, double threshold);

/// P(X <= threshold); complements mixture_prob_above.
double mixture_prob_at_or_below(const GaussianMixture& mix, double threshold);

struct NormalMoments {
  double mean;
  double variance;
};

/// Conjugate combination of two independent normal sources of information
/// about the same quantity (precision-weighted mean, summed precision).
NormalMoments precision_combine(double y_a, double var_a, double y_b, double var_b);

/// Same combination expressed in precisions. A zero precision is a vague
/// source and leaves the other one unchanged; both zero is an error.
NormalMoments precision_combine_precisions(double y_a, double prec_a,
                                           double y_b, double prec_b);

}  // namespace dynborrow
