#include "polent/source.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace polent {

namespace {

constexpr double kLn2 = std::numbers::ln2;
// FWHM of sinc^2(pi x) is 2 * 1.39155737... / pi.
constexpr double kSincHalfMaxRoot = 1.3915573782515103;

}  // namespace

std::string_view to_string(Lineshape shape) {
  switch (shape) {
    case Lineshape::lorentzian: return "lorentzian";
    case Lineshape::gaussian: return "gaussian";
    case Lineshape::flat_top: return "flat_top";
  }
  return "lorentzian";
}

Lineshape lineshape_from_string(std::string_view name) {
  if (name == "lorentzian") return Lineshape::lorentzian;
  if (name == "gaussian") return Lineshape::gaussian;
  if (name == "flat_top") return Lineshape::flat_top;
  throw std::invalid_argument(fmt::format("unknown lineshape '{}' (expected lorentzian, gaussian, flat_top)", name));
}

void PumpSpec::validate() const {
  if (!(power_mw >= 0.0) || !std::isfinite(power_mw)) throw std::invalid_argument("pump power must be >= 0");
  if (!(pair_coherence_time_ns > 0.0)) throw std::invalid_argument("pair coherence time must be > 0");
  if (!(wavelength_nm > 0.0)) throw std::invalid_argument("pump wavelength must be > 0");
}

void FilterSpec::validate() const {
  if (!(bandwidth_fwhm_mhz > 0.0) || !std::isfinite(bandwidth_fwhm_mhz))
    throw std::invalid_argument("filter bandwidth must be > 0");
  if (!(peak_transmission >= 0.0 && peak_transmission <= 1.0))
    throw std::invalid_argument("filter transmission must lie in [0,1]");
  if (!(center_wavelength_nm > 0.0)) throw std::invalid_argument("filter center wavelength must be > 0");
}

void PhaseMatchingSpec::validate() const {
  if (!(degeneracy_temperature_k > 0.0 && degenerate_wavelength_nm > 0.0 && splitting_coefficient > 0.0 &&
        native_bandwidth_thz > 0.0))
    throw std::invalid_argument("phase-matching parameters must be positive");
}

double calibrate_splitting_coefficient(double splitting_nm, double detuning_k, double degenerate_wavelength_nm) {
  // lambda_s^2 - (2 lambda_p + D) lambda_s + D lambda_p = 0 with lambda_p = lambda_deg / 2.
  const double lp = 0.5 * degenerate_wavelength_nm;
  const double b = 2.0 * lp + splitting_nm;
  const double ls = 0.5 * (b + std::sqrt(b * b - 4.0 * splitting_nm * lp));
  return (ls - degenerate_wavelength_nm) / std::sqrt(detuning_k);
}

double time_bandwidth_constant(Lineshape shape) {
  switch (shape) {
    case Lineshape::lorentzian:
    case Lineshape::gaussian: return 2.0 * kLn2 / std::numbers::pi;
    case Lineshape::flat_top: return 2.0 * kSincHalfMaxRoot / std::numbers::pi;
  }
  return 2.0 * kLn2 / std::numbers::pi;
}

double coherence_time_ns(const FilterSpec& filter) {
  filter.validate();
  return time_bandwidth_constant(filter.lineshape) / filter.bandwidth_fwhm_mhz * 1e3;
}

TuningPoint tuning_curve(double temperature_k, const PhaseMatchingSpec& pm) {
  if (!(temperature_k > 0.0)) throw std::invalid_argument("temperature must be > 0");
  pm.validate();
  const double lp = 0.5 * pm.degenerate_wavelength_nm;
  const double ls = pm.degenerate_wavelength_nm +
                    pm.splitting_coefficient * std::sqrt(std::max(0.0, pm.degeneracy_temperature_k - temperature_k));
  const double li = 1.0 / (1.0 / lp - 1.0 / ls);
  return {ls, li};
}

double pair_rate(const PumpSpec& pump, const FilterSpec& filter, double native_bandwidth_thz) {
  pump.validate();
  filter.validate();
  const double fraction = std::min(1.0, filter.bandwidth_fwhm_mhz / (native_bandwidth_thz * 1e6));
  return kBaseBrightnessPerMw * pump.power_mw * fraction * filter.peak_transmission;
}

std::vector<double> poisson_times(double rate_per_ns, double t0_ns, double t1_ns, Rng& rng) {
  std::vector<double> out;
  if (!(rate_per_ns > 0.0) || !(t1_ns > t0_ns)) return out;
  const double expected = rate_per_ns * (t1_ns - t0_ns);
  out.reserve(static_cast<std::size_t>(expected + 6.0 * std::sqrt(expected) + 16.0));
  std::exponential_distribution<double> gap(rate_per_ns);
  double t = t0_ns + gap(rng);
  while (t < t1_ns) {
    out.push_back(t);
    t += gap(rng);
  }
  return out;
}

double pump_phase_increment_variance(double dt_ns, double pair_coherence_time_ns) {
  return 2.0 * std::abs(dt_ns) / pair_coherence_time_ns;
}

EmissionStream emission_process(const PumpSpec& pump, const FilterSpec& filter, double duration_s,
                                std::uint64_t seed) {
  if (!(duration_s > 0.0)) throw std::invalid_argument("emission duration must be > 0");
  EmissionStream s;
  s.rate_per_s = pair_rate(pump, filter);
  s.mean_pairs_per_coherence_time = s.rate_per_s * coherence_time_ns(filter) * 1e-9;
  s.multi_pair_warning = s.mean_pairs_per_coherence_time > 1.0;
  Rng times_rng = make_rng(seed, "emission.times");
  Rng phase_rng = make_rng(seed, "emission.phase");
  const std::vector<double> times = poisson_times(s.rate_per_s * 1e-9, 0.0, duration_s * 1e9, times_rng);
  s.pairs.reserve(times.size());
  std::normal_distribution<double> unit(0.0, 1.0);
  double phase = 0.0;
  double last = 0.0;
  for (double t : times) {
    phase += std::sqrt(pump_phase_increment_variance(t - last, pump.pair_coherence_time_ns)) * unit(phase_rng);
    last = t;
    s.pairs.push_back({t, phase});
  }
  return s;
}

SourceMetrics brightness(double detected_rate, double power_mw, double bandwidth_mhz,
                         std::span<const double> efficiencies) {
  if (!(power_mw > 0.0)) throw std::invalid_argument("brightness needs power > 0");
  if (!(bandwidth_mhz > 0.0)) throw std::invalid_argument("brightness needs bandwidth > 0");
  if (!(detected_rate >= 0.0)) throw std::invalid_argument("detected rate must be >= 0");
  double product = 1.0;
  for (double e : efficiencies) {
    if (!(e > 0.0 && e <= 1.0)) throw std::invalid_argument(fmt::format("efficiency {} is outside (0,1]", e));
    product *= e;
  }
  SourceMetrics m;
  m.generated_pair_rate = detected_rate / product;
  m.brightness = m.generated_pair_rate / (power_mw * bandwidth_mhz);
  return m;
}

double sample_time_difference(Lineshape shape, double tau_c_ns, Rng& rng) {
  switch (shape) {
    case Lineshape::lorentzian: {
      std::exponential_distribution<double> e(2.0 * kLn2 / tau_c_ns);
      std::bernoulli_distribution sign(0.5);
      const double x = e(rng);
      return sign(rng) ? x : -x;
    }
    case Lineshape::gaussian: {
      std::normal_distribution<double> n(0.0, tau_c_ns / (2.0 * std::sqrt(2.0 * kLn2)));
      return n(rng);
    }
    case Lineshape::flat_top: {
      // sinc^2(u)/pi sampled against a Cauchy envelope with bound 2.
      const double scale = tau_c_ns / (2.0 * kSincHalfMaxRoot);
      std::cauchy_distribution<double> c(0.0, 1.0);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (;;) {
        const double x = c(rng);
        const double s = x == 0.0 ? 1.0 : std::sin(x) / x;
        if (2.0 * u(rng) <= s * s * (1.0 + x * x)) return x * scale;
      }
    }
  }
  return 0.0;
}

double mean_abs_time_difference(Lineshape shape, double tau_c_ns) {
  switch (shape) {
    case Lineshape::lorentzian: return tau_c_ns / (2.0 * kLn2);
    case Lineshape::gaussian: return tau_c_ns / (2.0 * std::sqrt(2.0 * kLn2)) * std::sqrt(2.0 / std::numbers::pi);
    case Lineshape::flat_top: return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

void write_pair_records(std::ostream& out, std::span<const PairRecord> pairs) {
  out << "time_ns,pump_phase_rad\n";
  for (const auto& p : pairs) out << fmt::format("{},{}\n", p.time_ns, p.pump_phase_rad);
}

}  // namespace polent
