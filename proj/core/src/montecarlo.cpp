#include "polent/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace polent {

namespace {

struct Outcome {
  double weight;
  Channel side1;
  Channel side2;
  bool keep1;
  bool keep2;
};

// Side assignment and survival pattern of a pair, conditioned on at least one
// photon surviving. Exact by independent thinning of the Poisson stream.
struct OutcomeTable {
  std::vector<Outcome> entries;
  std::vector<double> cumulative;
  double total = 0.0;
};

OutcomeTable build_outcomes(const SetupModel& s) {
  const double t = s.channel_transmission;
  const double arm1 = s.p_h(0) + s.p_v(0);
  const double arm2 = s.p_h(1) + s.p_v(1);
  auto q = [&](Channel side, double arm) {
    return t * arm * (side == Channel::alice ? s.detector_a.efficiency : s.detector_b.efficiency);
  };
  std::vector<std::pair<std::pair<Channel, Channel>, double>> routes;
  if (s.routing == Routing::deterministic) {
    routes.push_back({{Channel::alice, Channel::bob}, 1.0});
  } else {
    for (Channel c1 : {Channel::alice, Channel::bob})
      for (Channel c2 : {Channel::alice, Channel::bob}) routes.push_back({{c1, c2}, 0.25});
  }
  OutcomeTable table;
  for (const auto& [sides, w] : routes) {
    const double q1 = q(sides.first, arm1);
    const double q2 = q(sides.second, arm2);
    const Outcome both{w * q1 * q2, sides.first, sides.second, true, true};
    const Outcome only1{w * q1 * (1.0 - q2), sides.first, sides.second, true, false};
    const Outcome only2{w * (1.0 - q1) * q2, sides.first, sides.second, false, true};
    for (const Outcome& o : {both, only1, only2}) {
      if (o.weight <= 0.0) continue;
      table.total += o.weight;
      table.entries.push_back(o);
      table.cumulative.push_back(table.total);
    }
  }
  return table;
}

struct SegmentContext {
  const SetupModel& setup;
  const MeasurementSetting& setting;
  const McOptions& options;
  OutcomeTable outcomes;
  std::array<Complex, 2> central;
  double phase_sigma;
  double tau_c;
  double delta_t;
  double pad_ns;
  DelayWindow window;
  std::array<DelayWindow, 2> floor;
  double ph[2];
  double pv[2];
};

McResult run_segment(const SegmentContext& ctx, double length_ns, double offset_ns, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const double cand_rate = ctx.setup.pair_rate() * ctx.outcomes.total * 1e-9;
  const std::vector<double> emit = poisson_times(cand_rate, -ctx.pad_ns, length_ns, rng);

  std::vector<double> side[2];
  side[0].reserve(emit.size());
  side[1].reserve(emit.size());
  const auto& cum = ctx.outcomes.cumulative;
  const double total = ctx.outcomes.total;
  const bool analyzers = ctx.setting.analyzers;

  for (double t0 : emit) {
    const double r = unit(rng) * total;
    const std::size_t k = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), r) - cum.begin()), cum.size() - 1);
    const Outcome& o = ctx.outcomes.entries[k];

    Polarization pol[2];
    for (int i = 0; i < 2; ++i)
      pol[i] = unit(rng) * (ctx.ph[i] + ctx.pv[i]) < ctx.ph[i] ? Polarization::H : Polarization::V;
    const double dt = sample_time_difference(ctx.setup.filter.lineshape, ctx.tau_c, rng);
    const double t[2] = {t0 + (pol[0] == Polarization::V ? ctx.delta_t : 0.0),
                         t0 + dt + (pol[1] == Polarization::V ? ctx.delta_t : 0.0)};
    const bool keep[2] = {o.keep1, o.keep2};
    const Channel where[2] = {o.side1, o.side2};
    bool pass[2] = {keep[0], keep[1]};

    if (analyzers) {
      const bool coherent = keep[0] && keep[1] && where[0] != where[1] && pol[0] == pol[1];
      if (coherent) {
        const double noise = ctx.phase_sigma > 0.0 ? ctx.phase_sigma * normal(rng) : 0.0;
        const auto p = central_outcome_probabilities(ctx.central[0], ctx.central[1], noise, ctx.setting.a,
                                                     ctx.setting.b);
        const double u = unit(rng) * (p[0] + p[1] + p[2] + p[3]);
        // Outcome order (Alice, Bob): pp, pb, bp, bb.
        bool alice_pass;
        bool bob_pass;
        if (u < p[0]) {
          alice_pass = true, bob_pass = true;
        } else if (u < p[0] + p[1]) {
          alice_pass = true, bob_pass = false;
        } else if (u < p[0] + p[1] + p[2]) {
          alice_pass = false, bob_pass = true;
        } else {
          alice_pass = false, bob_pass = false;
        }
        for (int i = 0; i < 2; ++i) pass[i] = where[i] == Channel::alice ? alice_pass : bob_pass;
      } else {
        for (int i = 0; i < 2; ++i)
          if (keep[i]) pass[i] = unit(rng) < pass_probability(ctx.setting, where[i], pol[i]);
      }
    }
    for (int i = 0; i < 2; ++i)
      if (pass[i]) side[static_cast<int>(where[i])].push_back(t[i]);
  }

  std::sort(side[0].begin(), side[0].end());
  std::sort(side[1].begin(), side[1].end());

  DetectorSpec da = ctx.setup.detector_a;
  DetectorSpec db = ctx.setup.detector_b;
  da.efficiency = 1.0;
  db.efficiency = 1.0;
  const std::vector<TimestampRecord> ra = detect(side[0], da, Channel::alice, length_ns, rng);
  const std::vector<TimestampRecord> rb = detect(side[1], db, Channel::bob, length_ns, rng);
  const std::vector<double> ta = times_of(ra);
  const std::vector<double> tb = times_of(rb);

  McResult res;
  res.duration_s = length_ns * 1e-9;
  res.candidates = emit.size();
  res.singles_a = ta.size();
  res.singles_b = tb.size();
  res.window_counts = count_coincidences(ta, tb, ctx.window);
  res.floor_counts = count_coincidences(ta, tb, ctx.floor[0]) + count_coincidences(ta, tb, ctx.floor[1]);
  res.window_width_ns = ctx.window.width();
  res.floor_width_ns = ctx.floor[0].width() + ctx.floor[1].width();
  res.segments = 1;
  if (ctx.options.histogram)
    res.histogram = build_histogram(ta, tb, ctx.options.bin_width_ns, ctx.options.max_delay_ns);
  if (ctx.options.keep_streams) {
    res.stream_a = ra;
    res.stream_b = rb;
    for (auto& e : res.stream_a) e.time_ns += offset_ns;
    for (auto& e : res.stream_b) e.time_ns += offset_ns;
  }
  return res;
}

}  // namespace

double McResult::accidental_estimate() const {
  if (!(floor_width_ns > 0.0)) return 0.0;
  return static_cast<double>(floor_counts) * window_width_ns / floor_width_ns;
}

void McResult::merge(const McResult& o) {
  duration_s += o.duration_s;
  candidates += o.candidates;
  singles_a += o.singles_a;
  singles_b += o.singles_b;
  window_counts += o.window_counts;
  floor_counts += o.floor_counts;
  window_width_ns = o.window_width_ns;
  floor_width_ns = o.floor_width_ns;
  segments += o.segments;
  if (o.histogram) {
    if (histogram)
      histogram->merge(*o.histogram);
    else
      histogram = o.histogram;
  }
  stream_a.insert(stream_a.end(), o.stream_a.begin(), o.stream_a.end());
  stream_b.insert(stream_b.end(), o.stream_b.begin(), o.stream_b.end());
}

double mc_candidate_fraction(const SetupModel& setup) { return build_outcomes(setup).total; }

McResult run_monte_carlo(const SetupModel& setup, const MeasurementSetting& setting, const McOptions& options) {
  setup.validate();
  if (!(options.duration_s > 0.0)) throw std::invalid_argument("Monte Carlo duration must be > 0");
  if (options.max_candidates_per_segment == 0) throw std::invalid_argument("segment size must be > 0");

  SegmentContext ctx{setup, setting, options, build_outcomes(setup), {}, 0.0, setup.tau_c(),
                     setup.transcriber.delta_t_ns, 0.0, setup.window(), setup.floor_regions(), {}, {}};
  ctx.central = (setup.p_h(0) * setup.p_h(1) + setup.p_v(0) * setup.p_v(1)) > 0.0
                    ? setup.central_amplitudes()
                    : std::array<Complex, 2>{Complex(1.0), Complex(0.0)};
  ctx.phase_sigma = std::sqrt(setup.central_phase_variance());
  const CorrelationProfile prof = setup.profile();
  ctx.pad_ns = setup.transcriber.delta_t_ns + prof.support_halfwidth(1e-9) +
               8.0 * std::max(setup.detector_a.jitter_sigma_ns, setup.detector_b.jitter_sigma_ns);
  if (setup.filter.lineshape == Lineshape::flat_top) ctx.pad_ns = std::min(ctx.pad_ns, 1e5);
  for (int i = 0; i < 2; ++i) {
    ctx.ph[i] = setup.p_h(i);
    ctx.pv[i] = setup.p_v(i);
  }

  const double total_ns = options.duration_s * 1e9;
  const double expected = setup.pair_rate() * ctx.outcomes.total * options.duration_s;
  std::size_t n_seg = static_cast<std::size_t>(
      std::ceil(expected / static_cast<double>(options.max_candidates_per_segment)));
  n_seg = std::max<std::size_t>(n_seg, static_cast<std::size_t>(std::ceil(total_ns / 1e12)));
  n_seg = std::max<std::size_t>(n_seg, 1);
  const double seg_ns = total_ns / static_cast<double>(n_seg);

  McResult total;
  for (std::size_t k = 0; k < n_seg; ++k) {
    const McResult part =
        run_segment(ctx, seg_ns, seg_ns * static_cast<double>(k), derive_seed(options.seed, options.label, k));
    total.merge(part);
  }
  return total;
}

}  // namespace polent
