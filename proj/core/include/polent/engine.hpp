#pragma once

#include "polent/experiment.hpp"
#include "polent/montecarlo.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace polent {

/// Closed-form rates for one analyzer setting.
struct AnalyticRates {
  double incident_a = 0.0;        // photons + darks reaching detector A, /s
  double incident_b = 0.0;
  double live_a = 1.0;            // non-paralyzable live fraction
  double live_b = 1.0;
  double singles_a = 0.0;         // detected singles, /s
  double singles_b = 0.0;
  double central_rate = 0.0;      // true central-peak coincidences (all delays), /s
  double side_rate = 0.0;         // true side-peak coincidences (all delays), /s
  double joint_live = 1.0;        // probability that both detectors are live when a pair arrives
  double signal_in_window = 0.0;  // true coincidences inside the window, /s
  double accidental_in_window = 0.0;
  double floor_per_ns = 0.0;      // uncorrelated accidental density singles_a * singles_b, /s/ns
  /// Accidentals inside the window estimated from the side-region floor, as
  /// the Monte Carlo engine measures them.
  double floor_estimate_in_window = 0.0;

  double window_rate() const { return signal_in_window + accidental_in_window; }
};

AnalyticRates analytic_rates(const SetupModel& setup, const MeasurementSetting& setting);

/// Expected counts per bin of the delay histogram.
std::vector<double> expected_histogram(const SetupModel& setup, const MeasurementSetting& setting,
                                       double bin_width_ns, double max_delay_ns, double duration_s);

/// Counts recorded for one analyzer setting: coincidences in the window and the
/// accidental level expected inside it.
struct SettingCounts {
  double counts = 0.0;
  double accidentals = 0.0;
  double singles_a = 0.0;
  double singles_b = 0.0;
  double duration_s = 0.0;
};

enum class EngineKind { analytic, monte_carlo };

std::string_view to_string(EngineKind e);
EngineKind engine_from_string(std::string_view name);

class CountEngine {
 public:
  virtual ~CountEngine() = default;
  virtual EngineKind kind() const = 0;
  /// label identifies the setting so that every measurement has its own stream.
  virtual SettingCounts measure(const SetupModel& setup, const MeasurementSetting& setting, double duration_s,
                                std::uint64_t seed, std::string_view label) const = 0;
};

class AnalyticEngine final : public CountEngine {
 public:
  EngineKind kind() const override { return EngineKind::analytic; }
  SettingCounts measure(const SetupModel& setup, const MeasurementSetting& setting, double duration_s,
                        std::uint64_t seed, std::string_view label) const override;
};

class MonteCarloEngine final : public CountEngine {
 public:
  explicit MonteCarloEngine(std::size_t max_candidates_per_segment = std::size_t{1} << 20)
      : max_candidates_(max_candidates_per_segment) {}
  EngineKind kind() const override { return EngineKind::monte_carlo; }
  SettingCounts measure(const SetupModel& setup, const MeasurementSetting& setting, double duration_s,
                        std::uint64_t seed, std::string_view label) const override;

 private:
  std::size_t max_candidates_;
};

std::unique_ptr<CountEngine> make_engine(EngineKind kind);

}  // namespace polent
