#pragma once

#include "polent/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace polent {

enum class Lineshape { lorentzian, gaussian, flat_top };

std::string_view to_string(Lineshape shape);
Lineshape lineshape_from_string(std::string_view name);

struct PumpSpec {
  double power_mw = 1.0;
  double pair_coherence_time_ns = 3000.0;
  double wavelength_nm = 780.0;

  void validate() const;
};

struct FilterSpec {
  double bandwidth_fwhm_mhz = 540.0;
  Lineshape lineshape = Lineshape::lorentzian;
  double peak_transmission = 1.0;
  double center_wavelength_nm = 1560.0;

  void validate() const;
};

/// Splitting coefficient C such that the signal-idler separation equals
/// splitting_nm at detuning_k below degeneracy.
double calibrate_splitting_coefficient(double splitting_nm, double detuning_k, double degenerate_wavelength_nm);

struct PhaseMatchingSpec {
  double degeneracy_temperature_k = 387.0;
  double degenerate_wavelength_nm = 1560.0;
  double splitting_coefficient = calibrate_splitting_coefficient(110.0, 3.0, 1560.0);  // nm / sqrt(K)
  double native_bandwidth_thz = 4.0;

  void validate() const;
};

struct SourceMetrics {
  double generated_pair_rate = 0.0;            // pairs/s
  double mean_pairs_per_coherence_window = 0.0;
  double brightness = 0.0;                     // pairs/(s mW MHz)
};

/// Coincidence-peak FWHM times bandwidth for each lineshape.
double time_bandwidth_constant(Lineshape shape);
/// Single-photon coherence time in ns (FWHM of the intrinsic coincidence peak).
double coherence_time_ns(const FilterSpec& filter);

struct TuningPoint {
  double lambda_signal_nm;
  double lambda_idler_nm;
  double splitting_nm() const { return lambda_signal_nm - lambda_idler_nm; }
};
TuningPoint tuning_curve(double temperature_k, const PhaseMatchingSpec& pm);

inline constexpr double kBaseBrightnessPerMw = 1e10;  // pairs/s/mW over the native bandwidth

/// Filtered pair rate in pairs/s.
double pair_rate(const PumpSpec& pump, const FilterSpec& filter, double native_bandwidth_thz = 4.0);

struct PairRecord {
  double time_ns;
  double pump_phase_rad;
};

struct EmissionStream {
  std::vector<PairRecord> pairs;
  double rate_per_s = 0.0;
  double mean_pairs_per_coherence_time = 0.0;
  bool multi_pair_warning = false;
};

/// Homogeneous Poisson emission over [0, duration) with a Wiener pump phase.
EmissionStream emission_process(const PumpSpec& pump, const FilterSpec& filter, double duration_s,
                                std::uint64_t seed);

/// Sorted Poisson arrival times in [t0, t1) for a rate in events/ns.
std::vector<double> poisson_times(double rate_per_ns, double t0_ns, double t1_ns, Rng& rng);

/// Pump phase increment accumulated over dt for a Lorentzian pump.
double pump_phase_increment_variance(double dt_ns, double pair_coherence_time_ns);

SourceMetrics brightness(double detected_rate, double power_mw, double bandwidth_mhz,
                         std::span<const double> efficiencies);

/// Draws t2 - t1 for one pair according to the filtered lineshape.
double sample_time_difference(Lineshape shape, double tau_c_ns, Rng& rng);

/// Mean |t2 - t1| of sample_time_difference.
double mean_abs_time_difference(Lineshape shape, double tau_c_ns);

void write_pair_records(std::ostream& out, std::span<const PairRecord> pairs);

}  // namespace polent
