#pragma once

#include "polent/rng.hpp"
#include "polent/source.hpp"
#include "polent/transcriber.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace polent {

enum class Channel : std::uint8_t { alice = 0, bob = 1 };
enum class Origin : std::uint8_t { photon = 0, dark = 1 };

std::string_view to_string(Channel c);
std::string_view to_string(Origin o);

struct TimestampRecord {
  Channel channel;
  double time_ns;
  Origin origin;

  bool operator==(const TimestampRecord&) const = default;
};

struct DetectorSpec {
  double efficiency = 1.0;
  double dark_count_prob_per_ns = 0.0;
  double jitter_sigma_ns = 0.0;
  double dead_time_ns = 0.0;

  /// Free-running InGaAs avalanche photodiode.
  static DetectorSpec ingaas();
  /// Superconducting nanowire detector.
  static DetectorSpec snspd();
  void validate() const;
};

/// Per-detector jitter giving a 230 ps FWHM for the two-detector convolution.
inline constexpr double kDefaultJitterSigmaNs = 0.0690645;

/// Applies efficiency, jitter, dark counts and non-paralyzable dead time to
/// sorted ideal arrival times. Output is sorted and restricted to [0, duration).
std::vector<TimestampRecord> detect(std::span<const double> ideal_times_ns, const DetectorSpec& spec,
                                    Channel channel, double duration_ns, Rng& rng);

std::vector<double> times_of(std::span<const TimestampRecord> records);

/// Histogram of tB - tA with bins of width bin_width centred on k * bin_width.
class CoincidenceHistogram {
 public:
  CoincidenceHistogram() = default;
  CoincidenceHistogram(double bin_width_ns, double max_delay_ns);

  double bin_width() const noexcept { return bin_width_; }
  double max_delay() const noexcept { return max_delay_; }
  std::size_t size() const noexcept { return counts_.size(); }
  double bin_center(std::size_t i) const;
  std::uint64_t count(std::size_t i) const { return counts_[i]; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  std::uint64_t total() const;

  void add(double delay_ns);
  void add_to_bin(std::size_t i, std::uint64_t n);
  void merge(const CoincidenceHistogram& other);

  bool operator==(const CoincidenceHistogram&) const = default;

 private:
  double bin_width_ = 0.0;
  double max_delay_ = 0.0;
  std::int64_t half_bins_ = 0;
  std::vector<std::uint64_t> counts_;
};

/// Linear two-pointer sweep over all pairs with |tB - tA| <= max_delay.
CoincidenceHistogram build_histogram(std::span<const double> a, std::span<const double> b, double bin_width_ns,
                                     double max_delay_ns);

struct DelayWindow {
  double lo_ns;
  double hi_ns;
  double width() const { return hi_ns - lo_ns; }
};

/// Number of pairs with lo <= tB - tA <= hi (two-pointer sweep).
std::uint64_t count_coincidences(std::span<const double> a, std::span<const double> b, DelayWindow window);

struct WindowSelection {
  std::uint64_t counts = 0;
  bool overlaps_side_peaks = false;
  bool insufficient_statistics = false;
};

/// Coincidences inside a post-selection window around zero delay.
WindowSelection post_select_events(std::span<const double> a, std::span<const double> b, DelayWindow window,
                                   double delta_t_ns);

/// Flat accidental coincidence rate, /s, for singles in /s and a window in ns.
double accidental_rate(double singles_a, double singles_b, double window_ns);

enum class Polarization : std::uint8_t { H = 0, V = 1 };

struct SampledPair {
  double t1_ns;
  double t2_ns;
  int branch;
  Polarization pol1;
  Polarization pol2;
};

/// Draws a transcriber branch with probability |amplitude|^2 / norm and the
/// two detection times of one emitted pair.
SampledPair sample_branch_and_times(const PairRecord& pair, const TemporalBranchState& branches,
                                    Lineshape shape, double tau_c_ns, Rng& rng);

void write_timestamps(std::ostream& out, std::span<const TimestampRecord> records);
void write_histogram(std::ostream& out, const CoincidenceHistogram& h, double duration_s,
                     std::string_view config_hash);

}  // namespace polent
