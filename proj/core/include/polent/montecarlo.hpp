#pragma once

#include "polent/detection.hpp"
#include "polent/experiment.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace polent {

struct McOptions {
  double duration_s = 1.0;
  std::uint64_t seed = 0;
  std::string label = "mc";
  bool histogram = false;
  double bin_width_ns = 0.01;
  double max_delay_ns = 100.0;
  bool keep_streams = false;
  /// Upper bound on candidate pairs simulated per time segment.
  std::size_t max_candidates_per_segment = std::size_t{1} << 20;
};

struct McResult {
  double duration_s = 0.0;
  std::uint64_t candidates = 0;
  std::uint64_t singles_a = 0;
  std::uint64_t singles_b = 0;
  std::uint64_t window_counts = 0;
  std::uint64_t floor_counts = 0;
  double window_width_ns = 0.0;
  double floor_width_ns = 0.0;
  std::size_t segments = 0;
  std::optional<CoincidenceHistogram> histogram;
  std::vector<TimestampRecord> stream_a;
  std::vector<TimestampRecord> stream_b;

  /// Accidentals expected inside the window from the side-region floor.
  double accidental_estimate() const;
  void merge(const McResult& other);
};

/// Timestamp-level simulation of one analyzer setting. Long runs are split into
/// independent segments seeded by derive_seed(seed, label, segment).
McResult run_monte_carlo(const SetupModel& setup, const MeasurementSetting& setting, const McOptions& options);

/// Probability that at least one photon of a pair survives the
/// polarization-independent losses (used to pre-thin the emission stream).
double mc_candidate_fraction(const SetupModel& setup);

}  // namespace polent
