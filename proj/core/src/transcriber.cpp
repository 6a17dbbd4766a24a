#include "polent/transcriber.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace polent {

namespace {

constexpr double kNormTol = 1e-12;

void check_unit(const char* what, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(fmt::format("{} must lie in [0,1], got {}", what, v));
}

}  // namespace

void TranscriberSpec::validate() const {
  if (!(delta_t_ns > 0.0) || !std::isfinite(delta_t_ns))
    throw std::invalid_argument("transcriber delta_t must be positive");
  if (!std::isfinite(phi1) || !std::isfinite(phi2)) throw std::invalid_argument("transcriber phases must be finite");
  check_unit("arm_transmission_H", arm_transmission_H);
  check_unit("arm_transmission_V", arm_transmission_V);
}

ProductInput ProductInput::diagonal() {
  const double s = 1.0 / std::numbers::sqrt2;
  return {{s, 0.0}, {s, 0.0}, {s, 0.0}, {s, 0.0}};
}

void ProductInput::validate() const {
  const double n1 = std::norm(alpha1) + std::norm(beta1);
  const double n2 = std::norm(alpha2) + std::norm(beta2);
  if (!(std::abs(n1 - 1.0) <= kNormTol) || !(std::abs(n2 - 1.0) <= kNormTol))
    throw std::invalid_argument(fmt::format("product input is not normalized (|a1|^2+|b1|^2={}, |a2|^2+|b2|^2={})", n1, n2));
}

double TemporalBranchState::total_norm() const {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += probability(i);
  return s;
}

TemporalBranchState apply_transcriber(const ProductInput& in, const TranscriberSpec& spec) {
  in.validate();
  spec.validate();
  const double tH = spec.arm_transmission_H;
  const double tV = spec.arm_transmission_V;
  const Complex e1 = std::polar(1.0, spec.phi1);
  const Complex e2 = std::polar(1.0, spec.phi2);
  TemporalBranchState out;
  out.amplitude[kBranchHH] = in.alpha1 * in.alpha2 * tH * tH;
  out.amplitude[kBranchHV] = in.alpha1 * in.beta2 * e2 * tH * tV;
  out.amplitude[kBranchVH] = in.beta1 * e1 * in.alpha2 * tV * tH;
  out.amplitude[kBranchVV] = in.beta1 * in.beta2 * e1 * e2 * tV * tV;
  out.offset_ns = {0.0, -spec.delta_t_ns, spec.delta_t_ns, 0.0};
  return out;
}

PostSelection post_select_central(const TemporalBranchState& branches) {
  const Complex a = branches.amplitude[kBranchHH];
  const Complex b = branches.amplitude[kBranchVV];
  const double p = std::norm(a) + std::norm(b);
  if (!(p > 0.0)) throw std::domain_error("no central-peak support");
  const double n = std::sqrt(p);
  const double alpha = std::abs(a) / n;
  const double beta = std::abs(b) / n;
  double phi = 0.0;
  if (std::abs(a) > 0.0 && std::abs(b) > 0.0) phi = std::arg(b * std::conj(a));
  Vector4c psi = Vector4c::Zero();
  psi(kHH) = alpha;
  psi(kVV) = std::polar(beta, phi);
  return {TwoPhotonState::from_pure(psi), alpha, beta, phi, p};
}

std::string TimescaleReport::describe() const {
  return fmt::format("delta_t/tau_photon = {:.4g} ({}), tau_pair/delta_t = {:.4g} ({}), threshold {}", photon_ratio,
                     photon_ok ? "ok" : "too small", pair_ratio, pair_ok ? "ok" : "too small", threshold);
}

TimescaleReport validate_timescales(const TranscriberSpec& spec, double tau_photon_ns, double tau_pair_ns,
                                    double threshold) {
  if (!(tau_photon_ns > 0.0) || !(tau_pair_ns > 0.0) || !(spec.delta_t_ns > 0.0))
    throw std::invalid_argument("timescales must be positive");
  TimescaleReport r{};
  r.photon_ratio = spec.delta_t_ns / tau_photon_ns;
  r.pair_ratio = tau_pair_ns / spec.delta_t_ns;
  r.threshold = threshold;
  r.photon_ok = r.photon_ratio >= threshold;
  r.pair_ok = r.pair_ratio >= threshold;
  return r;
}

}  // namespace polent
