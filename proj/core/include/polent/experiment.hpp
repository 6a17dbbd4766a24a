#pragma once

#include "polent/detection.hpp"
#include "polent/profile.hpp"
#include "polent/source.hpp"
#include "polent/states.hpp"
#include "polent/transcriber.hpp"

#include <array>
#include <string_view>

namespace polent {

enum class Routing { beamsplitter, deterministic };

std::string_view to_string(Routing r);
Routing routing_from_string(std::string_view name);

/// Physical chain from pump to detectors shared by both engines.
struct SetupModel {
  PumpSpec pump;
  FilterSpec filter;
  TranscriberSpec transcriber;
  ProductInput input = ProductInput::diagonal();
  DetectorSpec detector_a = DetectorSpec::ingaas();
  DetectorSpec detector_b = DetectorSpec::ingaas();
  double channel_transmission = 1.0;  // per-photon transmission from source to detector
  Routing routing = Routing::beamsplitter;
  double servo_sigma_rad = 0.0;       // residual phase error of the stabilization loop
  double excess_dephasing_rad = 0.0;
  double window_width_ns = 0.0;       // 0 selects the central-peak FWHM
  double native_bandwidth_thz = 4.0;

  void validate() const;

  double pair_rate() const;
  double tau_c() const;
  CorrelationProfile profile() const;
  /// Post-selection window centred on zero delay.
  DelayWindow window() const;
  /// Side regions used to measure the flat accidental floor.
  std::array<DelayWindow, 2> floor_regions() const;
  double floor_width() const;

  /// Variance of the HH-VV relative phase per pair: pump diffusion over
  /// delta_t plus servo residual plus excess dephasing.
  double central_phase_variance() const;
  double coherence_factor() const;

  /// Probability that photon i (0 or 1) exits the transcriber in the H or V arm.
  double p_h(int photon) const;
  double p_v(int photon) const;
  /// Normalized central-peak amplitudes a|HH> + b|VV> (phase included in b).
  std::array<Complex, 2> central_amplitudes() const;
  /// Post-selected state including the per-pair dephasing.
  TwoPhotonState central_state() const;
};

struct MeasurementSetting {
  bool analyzers = false;
  AnalyzerSetting a;
  AnalyzerSetting b;

  static MeasurementSetting none() { return {}; }
  static MeasurementSetting with(AnalyzerSetting a, AnalyzerSetting b) { return {true, a, b}; }
};

/// Pass probability of a photon of polarization pol at analyzer s (1 without analyzers).
double pass_probability(const MeasurementSetting& m, Channel side, Polarization pol);

/// Joint outcome probabilities (pp, pb, bp, bb) of the central state for
/// relative phase phi, with Alice's analyzer first.
std::array<double, 4> central_outcome_probabilities(Complex a, Complex b, double extra_phase,
                                                    const AnalyzerSetting& alice, const AnalyzerSetting& bob);

}  // namespace polent
