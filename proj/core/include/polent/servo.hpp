#pragma once

#include "polent/states.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace polent {

struct DriftModel {
  double phase_per_kelvin = 1e3;          // rad/K
  double temperature_noise_sigma = 1e-3;  // K/sqrt(s), random walk
  double deterministic_ramp = 0.0;        // K/s

  void validate() const;
};

struct ServoSpec {
  double loop_rate_khz = 50.0;
  double actuator_range_rad = 50.0;
  double actuator_slew_rad_per_s = 1e5;
  double measurement_noise_sigma = 0.005;  // rad
  double kp = 0.0;
  double ki = 0.0;
  bool enabled = true;

  /// Gains selected by the tune grid search for the default drift.
  static ServoSpec tuned();
  void validate() const;
  double dt_s() const { return 1e-3 / loop_rate_khz; }
};

struct ServoTrace {
  std::vector<double> t_s;
  std::vector<double> phase_rad;
  std::vector<double> actuator_rad;
  double target_rad = 0.0;
  std::size_t settle_skip = 0;
  double residual_rms = 0.0;
  std::size_t saturated_samples = 0;
  bool range_exceeded = false;

  std::size_t size() const { return phase_rad.size(); }
  /// Residuals phase - target after the settling skip.
  std::vector<double> residuals() const;
};

/// Discrete-time loop at loop_rate: measure, apply a velocity-form PI
/// correction one sample later through a slew- and range-limited actuator.
ServoTrace simulate_closed_loop(const DriftModel& drift, const ServoSpec& servo, double target_phi,
                                double duration_s, std::uint64_t seed);

/// Time in ms until |phase - target| < pi/100 holds for 10 consecutive samples
/// after a target jump at t = 0. Throws std::runtime_error if not settled in 1 s.
double step_response(const ServoSpec& servo, double phase_jump, std::uint64_t seed = 0);

/// Dephasing model with sigma equal to the RMS residual.
NoiseModel residual_to_dephasing(std::span<const double> residuals);
NoiseModel residual_to_dephasing(const ServoTrace& trace);

/// exp(-sigma^2 / 2).
double visibility_factor(double sigma);
/// |<exp(i delta)>| over the residual samples.
double empirical_visibility_factor(std::span<const double> residuals);

struct TuneResult {
  double kp;
  double ki;
  double residual_rms;
  double settle_ms;
};

/// Grid search over (kp, ki) minimizing the residual RMS subject to a
/// sub-millisecond pi step response.
std::vector<TuneResult> tune_gains(const DriftModel& drift, const ServoSpec& base, std::span<const double> kp_grid,
                                   std::span<const double> ki_grid, double duration_s, std::uint64_t seed);

void write_servo_trace(std::ostream& out, const ServoTrace& trace, std::size_t stride = 1);

}  // namespace polent
