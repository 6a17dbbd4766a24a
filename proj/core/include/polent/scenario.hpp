#pragma once

#include "polent/engine.hpp"
#include "polent/experiment.hpp"
#include "polent/servo.hpp"
#include "polent/source.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace polent {

enum class MeasurementKind { histogram, bell, phase_scan, coincidence, servo };

std::string_view to_string(MeasurementKind k);
MeasurementKind measurement_from_string(std::string_view name);

struct AnalyzerPair {
  double alice_rad = 0.0;
  double bob_rad = 0.0;
};

struct HistogramPlan {
  double bin_width_ns = 0.01;
  double max_delay_ns = 100.0;
};

/// Bob's half-wave plate scanned over bob_points angles in [0, pi/2) for each of Alice's bases,
/// followed by the 16 CHSH runs.
struct BellPlan {
  std::vector<double> alice_bases{0.0, 0.78539816339744831, 0.39269908169872414, 1.1780972450961724};
  std::size_t bob_points = 16;
  ChshSettings chsh;
};

/// Relative phase phi2 stepped over [0, 2pi) with fixed analyzers.
struct PhaseScanPlan {
  std::size_t points = 16;
  double alice_rad = 0.39269908169872414;
  double bob_rad = 0.39269908169872414;
};

struct ServoTestPlan {
  double closed_duration_s = 1.0;
  double open_duration_s = 60.0;
  std::size_t open_seeds = 21;
  double step_rad = 3.14159265358979324;
};

/// Stored operating-point targets that are not derived by the model.
struct Targets {
  double mean_pairs_per_coherence_window = 0.0;
};

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  std::vector<std::string> issues_;
};

struct ScenarioConfig {
  std::string name = "custom";
  MeasurementKind kind = MeasurementKind::bell;
  EngineKind engine = EngineKind::analytic;
  double duration_s = 1.0;  // per analyzer setting
  std::uint64_t seed = 1;
  bool force = false;       // run even if the transcriber timescales are not separated

  double crystal_temperature_k = 387.0;
  PumpSpec pump;
  FilterSpec filter;
  PhaseMatchingSpec phase_matching;
  TranscriberSpec transcriber;
  ProductInput input = ProductInput::diagonal();
  DetectorSpec detector_a = DetectorSpec::ingaas();
  DetectorSpec detector_b = DetectorSpec::ingaas();
  double channel_transmission = 1.0;
  Routing routing = Routing::beamsplitter;
  double window_width_ns = 0.0;
  double excess_dephasing_rad = 0.0;

  ServoSpec servo = ServoSpec::tuned();
  DriftModel drift;
  bool servo_feed = true;  // dephase the central state by a simulated loop residual
  double servo_feed_duration_s = 0.2;

  std::vector<AnalyzerPair> analyzers;
  HistogramPlan histogram;
  BellPlan bell;
  PhaseScanPlan phase_scan;
  ServoTestPlan servo_test;
  Targets targets;

  /// Problems found across modules, each prefixed by the module name.
  std::vector<std::string> validation_errors() const;
  /// Throws ConfigError listing every problem.
  void validate() const;

  SetupModel setup(double servo_sigma_rad = 0.0) const;

  /// Canonical JSON: sorted keys, complex numbers as [re, im].
  std::string to_json() const;
  static ScenarioConfig from_json(std::string_view text);

  /// FNV-1a of the canonical JSON without the seed.
  std::uint64_t hash() const;
  std::string hash_hex() const;
};

ScenarioConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ScenarioConfig& config);

std::vector<std::string> preset_names();
/// Built-in preset; throws std::invalid_argument naming the known presets.
ScenarioConfig preset(std::string_view name);

/// Dotted paths of every numeric configuration field.
std::vector<std::string> parameter_paths(const ScenarioConfig& config);
double get_parameter(const ScenarioConfig& config, std::string_view path);
/// Copy of config with one numeric field replaced; unknown paths throw with the list of valid ones.
ScenarioConfig with_parameter(const ScenarioConfig& config, std::string_view path, double value);

}  // namespace polent
