#pragma once

#include "polent/analysis.hpp"
#include "polent/engine.hpp"
#include "polent/montecarlo.hpp"
#include "polent/scenario.hpp"
#include "polent/servo.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace polent {

std::string_view code_version();

struct Validation {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct FringeResult {
  std::string label;
  FringeScan raw;
  std::vector<double> accidentals;
  FringeFit raw_fit;
  NetCorrection net;
};

struct HistogramResult {
  CoincidenceHistogram histogram;
  double duration_s = 0.0;
  std::uint64_t coincidences = 0;
  std::optional<PeakMetrics> peaks;
  std::string peak_error;
  double expected_ratio = 2.0;
};

struct BellResult {
  std::vector<FringeResult> fringes;
  double v_raw = 0.0;
  double v_raw_error = 0.0;
  double v_net = 0.0;
  double v_net_error = 0.0;
  double e_zz = 0.0;
  double e_xx = 0.0;
  double fidelity = 0.0;
  double fidelity_net = 0.0;
  std::array<OutcomeCounts, 4> chsh_counts{};
  ChshResult chsh;
  double nsigma = 0.0;
};

struct PhaseScanResult {
  FringeResult fringe;
  double max_phase_rad = 0.0;
};

struct CoincidenceResult {
  std::vector<AnalyzerPair> settings;  // empty list measures without analyzers
  std::vector<SettingCounts> counts;
};

struct ServoResult {
  ServoTrace closed;
  double closed_rms = 0.0;
  std::vector<double> open_rms;
  std::vector<double> open_final_rad;
  /// Ensemble RMS over the open-loop seeds of the phase error at the end of the run.
  double open_final_rms = 0.0;
  double settle_ms = 0.0;
  bool settled = false;
};

struct RunRecord {
  ScenarioConfig config;
  std::string config_hash;
  std::string code_version;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;

  double servo_sigma_rad = 0.0;
  TuningPoint tuning{};
  double pair_rate = 0.0;
  double tau_c_ns = 0.0;
  double mean_pairs_per_coherence_time = 0.0;
  AnalyticRates rates;

  std::optional<HistogramResult> histogram;
  std::optional<BellResult> bell;
  std::optional<PhaseScanResult> phase_scan;
  std::optional<CoincidenceResult> coincidence;
  std::optional<ServoResult> servo;

  std::vector<Validation> validations;

  bool ok() const;
  std::string to_json(bool include_wall_time = true) const;
  /// Hash of the record without the wall time.
  std::uint64_t digest() const;
};

/// Validates the configuration (throws ConfigError) and runs its measurement.
/// When output_dir is non-empty the record is written to <output_dir>/<hash>-<seed>.json.
RunRecord run_scenario(const ScenarioConfig& config, const std::filesystem::path& output_dir = {});

std::filesystem::path record_path(const std::filesystem::path& output_dir, const RunRecord& record);
std::filesystem::path persist(const RunRecord& record, const std::filesystem::path& output_dir);

/// One run per value of the dotted parameter path; run i uses seed derive_seed(base.seed, "sweep." + path, i).
std::vector<RunRecord> sweep(const ScenarioConfig& base, std::string_view path, std::span<const double> values,
                             const std::filesystem::path& output_dir = {});

/// Timestamp streams of one Monte Carlo setting (the first analyzer pair, or none).
McResult simulate_timestamps(const ScenarioConfig& config, double duration_s);

struct Table1Reference {
  std::string preset;
  double v_raw;
  double v_raw_error;
  double fidelity;
  double s;
  double s_error;
};

inline constexpr double kTable1VisibilityTolerance = 0.03;
inline constexpr double kTable1ChshTolerance = 0.05;
inline constexpr double kTable1FidelityTolerance = 0.005;

const std::array<Table1Reference, 3>& table1_reference();

struct Table1Row {
  Table1Reference reference;
  std::string config_hash;
  double v_raw = 0.0;
  double v_raw_error = 0.0;
  double v_net = 0.0;
  double fidelity = 0.0;
  double s = 0.0;
  double s_error = 0.0;
  double nsigma = 0.0;
  bool v_ok = false;
  bool s_ok = false;
  bool f_ok = false;

  bool passed() const { return v_ok && s_ok && f_ok; }
};

struct Table1Options {
  std::optional<EngineKind> engine;
  std::optional<std::uint64_t> seed;
  double duration_scale = 1.0;
  std::filesystem::path output_dir;
};

struct Table1Result {
  std::vector<Table1Row> rows;
  bool complete = true;
  std::string error;

  bool passed() const;
  std::string to_json() const;
  std::string format() const;
};

/// Runs the three table1_* presets and compares them with the reference rows.
/// A failing run stops the reproduction and returns the partial table.
Table1Result reproduce_table1(const Table1Options& options = {});

}  // namespace polent
