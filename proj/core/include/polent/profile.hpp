#pragma once

#include "polent/source.hpp"

namespace polent {

/// Distribution of the relative delay of one coincidence peak: the intrinsic
/// lineshape correlation convolved with the combined Gaussian detector jitter.
class CorrelationProfile {
 public:
  CorrelationProfile(Lineshape shape, double tau_c_ns, double jitter_sigma_ns);

  double pdf(double x) const;
  double cdf(double x) const;
  double capture(double lo, double hi) const { return cdf(hi) - cdf(lo); }
  double fwhm() const;
  /// Half-width beyond which the tail mass is below tail_mass.
  double support_halfwidth(double tail_mass = 1e-12) const;

  Lineshape shape() const noexcept { return shape_; }
  double tau_c() const noexcept { return tau_c_; }
  double jitter_sigma() const noexcept { return sigma_; }

 private:
  double intrinsic_pdf(double x) const;
  double intrinsic_cdf(double x) const;

  Lineshape shape_;
  double tau_c_;
  double sigma_;
};

/// Combined standard deviation of two independent Gaussian jitters.
double combined_jitter(double sigma_a, double sigma_b);

}  // namespace polent
