#include "polent/profile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace polent {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kSincHalfMaxRoot = 1.3915573782515103;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

// exp(z^2) erfc(z) for z > 0.
double erfcx(double z) {
  if (z < 25.0) return std::exp(z * z) * std::erfc(z);
  const double z2 = z * z;
  return 1.0 / (z * std::sqrt(std::numbers::pi)) *
         (1.0 - 1.0 / (2.0 * z2) + 3.0 / (4.0 * z2 * z2) - 15.0 / (8.0 * z2 * z2 * z2));
}

// exp(s^2/(2b^2) - x/b) * Phi(x/s - s/b), evaluated without overflow.
double laplace_gauss_term(double x, double b, double s) {
  const double z = (s / b - x / s) / std::numbers::sqrt2;
  if (z <= 0.0) return std::exp(0.5 * s * s / (b * b) - x / b) * 0.5 * std::erfc(z);
  return 0.5 * std::exp(-0.5 * x * x / (s * s)) * erfcx(z);
}

// Integral of sin^2(u)/u^2 from 0 to y.
double sinc2_integral(double y) {
  if (y <= 0.0) return 0.0;
  if (y > 60.0) return 0.5 * std::numbers::pi - 1.0 / (2.0 * y) + std::sin(2.0 * y) / (4.0 * y * y);
  const int n = 2 * static_cast<int>(std::ceil(y / 0.005));
  const double h = y / n;
  auto f = [](double u) {
    if (u == 0.0) return 1.0;
    const double s = std::sin(u) / u;
    return s * s;
  };
  double acc = f(0.0) + f(y);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return acc * h / 3.0;
}

// Gauss-Hermite-like smoothing by Simpson over +-8 sigma.
template <class F>
double gauss_smooth(F&& g, double x, double sigma) {
  constexpr int n = 400;
  const double lo = -8.0;
  const double h = 16.0 / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double z = lo + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * normal_pdf(z) * g(x - sigma * z);
  }
  return acc * h / 3.0;
}

}  // namespace

double combined_jitter(double sigma_a, double sigma_b) { return std::hypot(sigma_a, sigma_b); }

CorrelationProfile::CorrelationProfile(Lineshape shape, double tau_c_ns, double jitter_sigma_ns)
    : shape_(shape), tau_c_(tau_c_ns), sigma_(jitter_sigma_ns) {
  if (!(tau_c_ns > 0.0)) throw std::invalid_argument("profile coherence time must be > 0");
  if (!(jitter_sigma_ns >= 0.0)) throw std::invalid_argument("profile jitter must be >= 0");
}

double CorrelationProfile::intrinsic_pdf(double x) const {
  switch (shape_) {
    case Lineshape::lorentzian: {
      const double b = tau_c_ / (2.0 * kLn2);
      return std::exp(-std::abs(x) / b) / (2.0 * b);
    }
    case Lineshape::gaussian: {
      const double s = tau_c_ / (2.0 * std::sqrt(2.0 * kLn2));
      return normal_pdf(x / s) / s;
    }
    case Lineshape::flat_top: {
      const double scale = tau_c_ / (2.0 * kSincHalfMaxRoot);
      const double u = x / scale;
      const double s = u == 0.0 ? 1.0 : std::sin(u) / u;
      return s * s / (std::numbers::pi * scale);
    }
  }
  return 0.0;
}

double CorrelationProfile::intrinsic_cdf(double x) const {
  switch (shape_) {
    case Lineshape::lorentzian: {
      const double b = tau_c_ / (2.0 * kLn2);
      return x < 0.0 ? 0.5 * std::exp(x / b) : 1.0 - 0.5 * std::exp(-x / b);
    }
    case Lineshape::gaussian: {
      const double s = tau_c_ / (2.0 * std::sqrt(2.0 * kLn2));
      return normal_cdf(x / s);
    }
    case Lineshape::flat_top: {
      const double scale = tau_c_ / (2.0 * kSincHalfMaxRoot);
      const double g = sinc2_integral(std::abs(x) / scale) / std::numbers::pi;
      return x < 0.0 ? 0.5 - g : 0.5 + g;
    }
  }
  return 0.0;
}

double CorrelationProfile::pdf(double x) const {
  if (sigma_ == 0.0) return intrinsic_pdf(x);
  switch (shape_) {
    case Lineshape::lorentzian: {
      const double b = tau_c_ / (2.0 * kLn2);
      return (laplace_gauss_term(x, b, sigma_) + laplace_gauss_term(-x, b, sigma_)) / (2.0 * b);
    }
    case Lineshape::gaussian: {
      const double s0 = tau_c_ / (2.0 * std::sqrt(2.0 * kLn2));
      const double s = std::hypot(s0, sigma_);
      return normal_pdf(x / s) / s;
    }
    case Lineshape::flat_top:
      return gauss_smooth([this](double u) { return intrinsic_pdf(u); }, x, sigma_);
  }
  return 0.0;
}

double CorrelationProfile::cdf(double x) const {
  if (sigma_ == 0.0) return intrinsic_cdf(x);
  switch (shape_) {
    case Lineshape::lorentzian: {
      const double b = tau_c_ / (2.0 * kLn2);
      const double v = normal_cdf(x / sigma_) - 0.5 * laplace_gauss_term(x, b, sigma_) +
                       0.5 * laplace_gauss_term(-x, b, sigma_);
      return std::clamp(v, 0.0, 1.0);
    }
    case Lineshape::gaussian: {
      const double s0 = tau_c_ / (2.0 * std::sqrt(2.0 * kLn2));
      return normal_cdf(x / std::hypot(s0, sigma_));
    }
    case Lineshape::flat_top:
      return gauss_smooth([this](double u) { return intrinsic_cdf(u); }, x, sigma_);
  }
  return 0.0;
}

double CorrelationProfile::fwhm() const {
  const double half = 0.5 * pdf(0.0);
  double hi = 0.5 * (tau_c_ + 2.3548 * sigma_);
  while (pdf(hi) > half) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (pdf(mid) > half ? lo : hi) = mid;
  }
  return lo + hi;
}

double CorrelationProfile::support_halfwidth(double tail_mass) const {
  double x = tau_c_ + 6.0 * sigma_;
  if (shape_ == Lineshape::flat_top) {
    // Tail mass of sinc^2 decays as 1/x.
    const double scale = tau_c_ / (2.0 * kSincHalfMaxRoot);
    return std::max(x, scale / (std::numbers::pi * tail_mass)) + 8.0 * sigma_;
  }
  while (1.0 - cdf(x) > tail_mass) x *= 1.5;
  return x;
}

}  // namespace polent
