#include "polent/servo.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>

#include "polent/rng.hpp"

namespace polent {

namespace {

constexpr double kSettleTolerance = std::numbers::pi / 100.0;
constexpr std::size_t kSettleSamples = 10;

struct LoopState {
  double u = 0.0;
  double prev_error = 0.0;
  bool saturated = false;
};

// One controller update: returns the actuator value applied at the next sample.
double controller_step(LoopState& s, const ServoSpec& servo, double error) {
  if (!servo.enabled) return s.u;
  double du = servo.kp * (error - s.prev_error) + servo.ki * error;
  s.prev_error = error;
  const double slew = servo.actuator_slew_rad_per_s * servo.dt_s();
  du = std::clamp(du, -slew, slew);
  double next = s.u + du;
  s.saturated = std::abs(next) >= servo.actuator_range_rad;
  next = std::clamp(next, -servo.actuator_range_rad, servo.actuator_range_rad);
  s.u = next;
  return next;
}

std::size_t default_skip(std::size_t n) { return std::min(n - 1, std::max<std::size_t>(10, n / 100)); }

}  // namespace

void DriftModel::validate() const {
  if (!(phase_per_kelvin >= 0.0 && temperature_noise_sigma >= 0.0 && deterministic_ramp >= 0.0))
    throw std::invalid_argument("drift magnitudes must be non-negative");
}

ServoSpec ServoSpec::tuned() {
  ServoSpec s;
  s.kp = 0.2;
  s.ki = 0.3;
  return s;
}

void ServoSpec::validate() const {
  if (!(loop_rate_khz > 0.0)) throw std::invalid_argument("servo loop rate must be > 0");
  if (!(actuator_range_rad > 0.0)) throw std::invalid_argument("actuator range must be > 0");
  if (!(actuator_slew_rad_per_s > 0.0)) throw std::invalid_argument("actuator slew must be > 0");
  if (!(measurement_noise_sigma >= 0.0)) throw std::invalid_argument("measurement noise must be >= 0");
}

std::vector<double> ServoTrace::residuals() const {
  std::vector<double> r;
  r.reserve(phase_rad.size() - std::min(settle_skip, phase_rad.size()));
  for (std::size_t i = settle_skip; i < phase_rad.size(); ++i) r.push_back(phase_rad[i] - target_rad);
  return r;
}

ServoTrace simulate_closed_loop(const DriftModel& drift, const ServoSpec& servo, double target_phi,
                                double duration_s, std::uint64_t seed) {
  drift.validate();
  servo.validate();
  const double dt = servo.dt_s();
  const auto n = static_cast<std::size_t>(std::llround(duration_s * servo.loop_rate_khz * 1e3));
  if (n < 10) throw std::invalid_argument("servo duration must cover at least 10 loop periods");

  Rng temp_rng = make_rng(seed, "servo.temperature");
  Rng meas_rng = make_rng(seed, "servo.measurement");
  std::normal_distribution<double> unit(0.0, 1.0);

  ServoTrace tr;
  tr.target_rad = target_phi;
  tr.t_s.resize(n);
  tr.phase_rad.resize(n);
  tr.actuator_rad.resize(n);

  LoopState st;
  double temperature = 0.0;
  const double step_sigma = drift.temperature_noise_sigma * std::sqrt(dt);
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) temperature += step_sigma * unit(temp_rng) + drift.deterministic_ramp * dt;
    const double phase = target_phi + drift.phase_per_kelvin * temperature + st.u;
    tr.t_s[k] = static_cast<double>(k) * dt;
    tr.phase_rad[k] = phase;
    tr.actuator_rad[k] = st.u;
    const double measured = phase + servo.measurement_noise_sigma * unit(meas_rng);
    controller_step(st, servo, target_phi - measured);
    if (st.saturated) ++tr.saturated_samples;
  }
  tr.settle_skip = default_skip(n);
  double acc = 0.0;
  for (std::size_t k = tr.settle_skip; k < n; ++k) {
    const double e = tr.phase_rad[k] - target_phi;
    acc += e * e;
  }
  tr.residual_rms = std::sqrt(acc / static_cast<double>(n - tr.settle_skip));
  tr.range_exceeded = static_cast<double>(tr.saturated_samples) > 0.1 * static_cast<double>(n);
  return tr;
}

double step_response(const ServoSpec& servo, double phase_jump, std::uint64_t seed) {
  servo.validate();
  if (std::abs(phase_jump) > servo.actuator_range_rad)
    throw std::invalid_argument("phase jump exceeds the actuator range");
  const double dt = servo.dt_s();
  const auto limit = static_cast<std::size_t>(std::ceil(1.0 / dt));
  Rng rng = make_rng(seed, "servo.step");
  std::normal_distribution<double> unit(0.0, 1.0);
  LoopState st;
  // Loop locked at zero before the jump; the phase is measured relative to the new target.
  const double target = phase_jump;
  st.prev_error = 0.0;
  std::size_t run = 0;
  for (std::size_t k = 0; k < limit; ++k) {
    const double phase = st.u;
    if (std::abs(phase - target) < kSettleTolerance) {
      if (++run == kSettleSamples) return static_cast<double>(k + 1 - kSettleSamples) * dt * 1e3;
    } else {
      run = 0;
    }
    const double measured = phase + servo.measurement_noise_sigma * unit(rng);
    controller_step(st, servo, target - measured);
  }
  throw std::runtime_error(fmt::format("servo did not settle within 1 s after a {} rad jump", phase_jump));
}

NoiseModel residual_to_dephasing(std::span<const double> residuals) {
  if (residuals.empty()) throw std::invalid_argument("residual trace is empty");
  double acc = 0.0;
  for (double r : residuals) acc += r * r;
  return {std::sqrt(acc / static_cast<double>(residuals.size())), 0.0};
}

NoiseModel residual_to_dephasing(const ServoTrace& trace) { return residual_to_dephasing(trace.residuals()); }

double visibility_factor(double sigma) { return std::exp(-0.5 * sigma * sigma); }

double empirical_visibility_factor(std::span<const double> residuals) {
  if (residuals.empty()) throw std::invalid_argument("residual trace is empty");
  double c = 0.0, s = 0.0;
  for (double r : residuals) {
    c += std::cos(r);
    s += std::sin(r);
  }
  const double n = static_cast<double>(residuals.size());
  return std::hypot(c / n, s / n);
}

std::vector<TuneResult> tune_gains(const DriftModel& drift, const ServoSpec& base, std::span<const double> kp_grid,
                                   std::span<const double> ki_grid, double duration_s, std::uint64_t seed) {
  std::vector<TuneResult> out;
  for (double kp : kp_grid) {
    for (double ki : ki_grid) {
      ServoSpec s = base;
      s.kp = kp;
      s.ki = ki;
      double settle = std::numeric_limits<double>::infinity();
      try {
        settle = step_response(s, std::numbers::pi, seed);
      } catch (const std::runtime_error&) {
      }
      const ServoTrace tr = simulate_closed_loop(drift, s, 0.0, duration_s, seed);
      out.push_back({kp, ki, tr.range_exceeded ? std::numeric_limits<double>::infinity() : tr.residual_rms, settle});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const TuneResult& a, const TuneResult& b) {
    const bool fa = a.settle_ms < 1.0, fb = b.settle_ms < 1.0;
    if (fa != fb) return fa;
    return a.residual_rms < b.residual_rms;
  });
  return out;
}

void write_servo_trace(std::ostream& out, const ServoTrace& trace, std::size_t stride) {
  out << "t_s,phase_rad,actuator_rad\n";
  stride = std::max<std::size_t>(stride, 1);
  for (std::size_t i = 0; i < trace.size(); i += stride)
    out << fmt::format("{},{},{}\n", trace.t_s[i], trace.phase_rad[i], trace.actuator_rad[i]);
}

}  // namespace polent
