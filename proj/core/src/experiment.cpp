#include "polent/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polent {

std::string_view to_string(Routing r) { return r == Routing::beamsplitter ? "beamsplitter" : "deterministic"; }

Routing routing_from_string(std::string_view name) {
  if (name == "beamsplitter") return Routing::beamsplitter;
  if (name == "deterministic") return Routing::deterministic;
  throw std::invalid_argument(fmt::format("unknown routing '{}' (expected beamsplitter, deterministic)", name));
}

void SetupModel::validate() const {
  pump.validate();
  filter.validate();
  transcriber.validate();
  input.validate();
  detector_a.validate();
  detector_b.validate();
  if (!(channel_transmission >= 0.0 && channel_transmission <= 1.0))
    throw std::invalid_argument("channel transmission must lie in [0,1]");
  if (!(servo_sigma_rad >= 0.0) || !(excess_dephasing_rad >= 0.0))
    throw std::invalid_argument("dephasing terms must be >= 0");
  if (!(window_width_ns >= 0.0)) throw std::invalid_argument("window width must be >= 0");
}

double SetupModel::pair_rate() const { return polent::pair_rate(pump, filter, native_bandwidth_thz); }

double SetupModel::tau_c() const { return coherence_time_ns(filter); }

CorrelationProfile SetupModel::profile() const {
  return {filter.lineshape, tau_c(), combined_jitter(detector_a.jitter_sigma_ns, detector_b.jitter_sigma_ns)};
}

DelayWindow SetupModel::window() const {
  const double w = window_width_ns > 0.0 ? window_width_ns : profile().fwhm();
  return {-0.5 * w, 0.5 * w};
}

std::array<DelayWindow, 2> SetupModel::floor_regions() const {
  const CorrelationProfile p = profile();
  const double gap = transcriber.delta_t_ns + p.support_halfwidth(1e-9);
  const double length = std::max(1000.0, 20.0 * window().width());
  return {DelayWindow{-gap - length, -gap}, DelayWindow{gap, gap + length}};
}

double SetupModel::floor_width() const {
  const auto r = floor_regions();
  return r[0].width() + r[1].width();
}

double SetupModel::central_phase_variance() const {
  return pump_phase_increment_variance(transcriber.delta_t_ns, pump.pair_coherence_time_ns) +
         servo_sigma_rad * servo_sigma_rad + excess_dephasing_rad * excess_dephasing_rad;
}

double SetupModel::coherence_factor() const { return std::exp(-0.5 * central_phase_variance()); }

double SetupModel::p_h(int photon) const {
  const Complex a = photon == 0 ? input.alpha1 : input.alpha2;
  const double t = transcriber.arm_transmission_H;
  return std::norm(a) * t * t;
}

double SetupModel::p_v(int photon) const {
  const Complex b = photon == 0 ? input.beta1 : input.beta2;
  const double t = transcriber.arm_transmission_V;
  return std::norm(b) * t * t;
}

std::array<Complex, 2> SetupModel::central_amplitudes() const {
  const TemporalBranchState br = apply_transcriber(input, transcriber);
  const Complex a = br.amplitude[kBranchHH];
  const Complex b = br.amplitude[kBranchVV];
  const double n = std::sqrt(std::norm(a) + std::norm(b));
  if (!(n > 0.0)) throw std::domain_error("no central-peak support");
  // Global phase referenced to the HH amplitude.
  const Complex ref = std::abs(a) > 0.0 ? std::conj(a) / std::abs(a) : Complex(1.0, 0.0);
  return {a * ref / n, b * ref / n};
}

TwoPhotonState SetupModel::central_state() const {
  const auto amp = central_amplitudes();
  Vector4c psi = Vector4c::Zero();
  psi(kHH) = amp[0];
  psi(kVV) = amp[1];
  const TwoPhotonState pure = TwoPhotonState::from_pure(psi);
  return apply_noise(pure, NoiseModel{std::sqrt(central_phase_variance()), 0.0});
}

double pass_probability(const MeasurementSetting& m, Channel side, Polarization pol) {
  if (!m.analyzers) return 1.0;
  const Eigen::Vector2d v = (side == Channel::alice ? m.a : m.b).pass_vector();
  return pol == Polarization::H ? v(0) * v(0) : v(1) * v(1);
}

std::array<double, 4> central_outcome_probabilities(Complex a, Complex b, double extra_phase,
                                                    const AnalyzerSetting& alice, const AnalyzerSetting& bob) {
  const Eigen::Vector2d pa = alice.pass_vector();
  const Eigen::Vector2d pb = bob.pass_vector();
  const double ca = pa(0), sa = pa(1), cb = pb(0), sb = pb(1);
  const Complex bb = b * std::polar(1.0, extra_phase);
  const Complex pp = a * ca * cb + bb * sa * sb;
  const Complex pk = -a * ca * sb + bb * sa * cb;
  const Complex kp = -a * sa * cb + bb * ca * sb;
  const Complex kk = a * sa * sb + bb * ca * cb;
  return {std::norm(pp), std::norm(pk), std::norm(kp), std::norm(kk)};
}

}  // namespace polent
