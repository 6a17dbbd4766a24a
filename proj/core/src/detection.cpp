#include "polent/detection.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace polent {

std::string_view to_string(Channel c) { return c == Channel::alice ? "alice" : "bob"; }
std::string_view to_string(Origin o) { return o == Origin::photon ? "photon" : "dark"; }

DetectorSpec DetectorSpec::ingaas() { return {0.20, 1e-6, kDefaultJitterSigmaNs, 1000.0}; }
DetectorSpec DetectorSpec::snspd() { return {0.07, 1e-8, kDefaultJitterSigmaNs, 50.0}; }

void DetectorSpec::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) throw std::invalid_argument("detector efficiency must lie in [0,1]");
  if (!(dark_count_prob_per_ns >= 0.0)) throw std::invalid_argument("dark count probability must be >= 0");
  if (!(jitter_sigma_ns >= 0.0)) throw std::invalid_argument("detector jitter must be >= 0");
  if (!(dead_time_ns >= 0.0)) throw std::invalid_argument("detector dead time must be >= 0");
}

std::vector<TimestampRecord> detect(std::span<const double> ideal_times_ns, const DetectorSpec& spec,
                                    Channel channel, double duration_ns, Rng& rng) {
  spec.validate();
  if (!std::is_sorted(ideal_times_ns.begin(), ideal_times_ns.end()))
    throw std::invalid_argument("detect requires sorted arrival times");

  std::vector<TimestampRecord> events;
  events.reserve(ideal_times_ns.size() +
                 static_cast<std::size_t>(spec.dark_count_prob_per_ns * duration_ns * 1.2 + 16.0));
  std::bernoulli_distribution keep(spec.efficiency);
  std::normal_distribution<double> jitter(0.0, 1.0);
  const bool all_kept = spec.efficiency >= 1.0;
  for (double t : ideal_times_ns) {
    if (!all_kept && !keep(rng)) continue;
    const double tj = spec.jitter_sigma_ns > 0.0 ? t + spec.jitter_sigma_ns * jitter(rng) : t;
    events.push_back({channel, tj, Origin::photon});
  }
  if (spec.jitter_sigma_ns > 0.0)
    std::sort(events.begin(), events.end(),
              [](const TimestampRecord& x, const TimestampRecord& y) { return x.time_ns < y.time_ns; });

  if (spec.dark_count_prob_per_ns > 0.0 && duration_ns > 0.0) {
    const std::vector<double> dark = poisson_times(spec.dark_count_prob_per_ns, 0.0, duration_ns, rng);
    std::vector<TimestampRecord> merged;
    merged.reserve(events.size() + dark.size());
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < events.size() || j < dark.size()) {
      if (j == dark.size() || (i < events.size() && events[i].time_ns <= dark[j])) {
        merged.push_back(events[i++]);
      } else {
        merged.push_back({channel, dark[j++], Origin::dark});
      }
    }
    events.swap(merged);
  }

  std::vector<TimestampRecord> out;
  out.reserve(events.size());
  double ready = -std::numeric_limits<double>::infinity();
  for (const auto& e : events) {
    if (e.time_ns < 0.0 || e.time_ns >= duration_ns) continue;
    if (e.time_ns < ready) continue;
    out.push_back(e);
    ready = e.time_ns + spec.dead_time_ns;
  }
  return out;
}

std::vector<double> times_of(std::span<const TimestampRecord> records) {
  std::vector<double> t(records.size());
  std::transform(records.begin(), records.end(), t.begin(), [](const TimestampRecord& r) { return r.time_ns; });
  return t;
}

CoincidenceHistogram::CoincidenceHistogram(double bin_width_ns, double max_delay_ns)
    : bin_width_(bin_width_ns), max_delay_(max_delay_ns) {
  if (!(bin_width_ns > 0.0)) throw std::invalid_argument("histogram bin width must be > 0");
  if (!(max_delay_ns >= 0.0)) throw std::invalid_argument("histogram max delay must be >= 0");
  half_bins_ = static_cast<std::int64_t>(std::ceil(max_delay_ns / bin_width_ns - 0.5));
  half_bins_ = std::max<std::int64_t>(half_bins_, 0);
  counts_.assign(static_cast<std::size_t>(2 * half_bins_ + 1), 0);
}

double CoincidenceHistogram::bin_center(std::size_t i) const {
  return (static_cast<double>(i) - static_cast<double>(half_bins_)) * bin_width_;
}

std::uint64_t CoincidenceHistogram::total() const {
  std::uint64_t s = 0;
  for (auto c : counts_) s += c;
  return s;
}

void CoincidenceHistogram::add(double delay_ns) {
  if (std::abs(delay_ns) > max_delay_) return;
  std::int64_t k = static_cast<std::int64_t>(std::floor(delay_ns / bin_width_ + 0.5)) + half_bins_;
  k = std::clamp<std::int64_t>(k, 0, 2 * half_bins_);
  ++counts_[static_cast<std::size_t>(k)];
}

void CoincidenceHistogram::add_to_bin(std::size_t i, std::uint64_t n) {
  if (i >= counts_.size()) throw std::out_of_range("histogram bin index out of range");
  counts_[i] += n;
}

void CoincidenceHistogram::merge(const CoincidenceHistogram& other) {
  if (counts_.empty()) {
    *this = other;
    return;
  }
  if (other.counts_.empty()) return;
  if (other.bin_width_ != bin_width_ || other.half_bins_ != half_bins_)
    throw std::invalid_argument("cannot merge histograms with different binning");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

namespace {

void require_sorted(std::span<const double> v, const char* name) {
  if (!std::is_sorted(v.begin(), v.end())) throw std::invalid_argument(fmt::format("{} stream is not sorted", name));
}

}  // namespace

CoincidenceHistogram build_histogram(std::span<const double> a, std::span<const double> b, double bin_width_ns,
                                     double max_delay_ns) {
  require_sorted(a, "Alice");
  require_sorted(b, "Bob");
  CoincidenceHistogram h(bin_width_ns, max_delay_ns);
  std::size_t lo = 0;
  for (double ta : a) {
    while (lo < b.size() && b[lo] < ta - max_delay_ns) ++lo;
    for (std::size_t j = lo; j < b.size() && b[j] <= ta + max_delay_ns; ++j) h.add(b[j] - ta);
  }
  return h;
}

std::uint64_t count_coincidences(std::span<const double> a, std::span<const double> b, DelayWindow w) {
  require_sorted(a, "Alice");
  require_sorted(b, "Bob");
  if (!(w.hi_ns >= w.lo_ns)) return 0;
  std::uint64_t n = 0;
  std::size_t lo = 0;
  std::size_t hi = 0;
  for (double ta : a) {
    while (lo < b.size() && b[lo] - ta < w.lo_ns) ++lo;
    if (hi < lo) hi = lo;
    while (hi < b.size() && b[hi] - ta <= w.hi_ns) ++hi;
    n += hi - lo;
  }
  return n;
}

WindowSelection post_select_events(std::span<const double> a, std::span<const double> b, DelayWindow window,
                                   double delta_t_ns) {
  WindowSelection s;
  s.overlaps_side_peaks = window.lo_ns <= -0.5 * delta_t_ns || window.hi_ns >= 0.5 * delta_t_ns;
  s.counts = count_coincidences(a, b, window);
  s.insufficient_statistics = s.counts == 0;
  return s;
}

double accidental_rate(double singles_a, double singles_b, double window_ns) {
  if (!(singles_a >= 0.0 && singles_b >= 0.0 && window_ns >= 0.0))
    throw std::invalid_argument("accidental rate inputs must be non-negative");
  return singles_a * singles_b * window_ns * 1e-9;
}

SampledPair sample_branch_and_times(const PairRecord& pair, const TemporalBranchState& branches,
                                    Lineshape shape, double tau_c_ns, Rng& rng) {
  const double norm = branches.total_norm();
  if (!(norm > 0.0)) throw std::invalid_argument("branch state has zero norm");
  std::uniform_real_distribution<double> u(0.0, norm);
  const double r = u(rng);
  int branch = 3;
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    acc += branches.probability(i);
    if (r < acc) {
      branch = i;
      break;
    }
  }
  const Polarization p1 = (branch == kBranchHH || branch == kBranchHV) ? Polarization::H : Polarization::V;
  const Polarization p2 = (branch == kBranchHH || branch == kBranchVH) ? Polarization::H : Polarization::V;
  const double late = std::abs(branches.offset_ns[kBranchVH]);
  const double dt = sample_time_difference(shape, tau_c_ns, rng);
  SampledPair s;
  s.branch = branch;
  s.pol1 = p1;
  s.pol2 = p2;
  s.t1_ns = pair.time_ns + (p1 == Polarization::V ? late : 0.0);
  s.t2_ns = pair.time_ns + dt + (p2 == Polarization::V ? late : 0.0);
  return s;
}

void write_timestamps(std::ostream& out, std::span<const TimestampRecord> records) {
  out << "channel,time_ns,origin\n";
  for (const auto& r : records) out << fmt::format("{},{},{}\n", to_string(r.channel), r.time_ns, to_string(r.origin));
}

void write_histogram(std::ostream& out, const CoincidenceHistogram& h, double duration_s,
                     std::string_view config_hash) {
  out << fmt::format("# bin_width_ns={}\n# duration_s={}\n# config_hash={}\n", h.bin_width(), duration_s, config_hash);
  out << "delay_ns,count\n";
  for (std::size_t i = 0; i < h.size(); ++i) out << fmt::format("{},{}\n", h.bin_center(i), h.count(i));
}

}  // namespace polent
