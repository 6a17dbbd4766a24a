#include "polent/engine.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace polent {

std::string_view to_string(EngineKind e) { return e == EngineKind::analytic ? "analytic" : "monte_carlo"; }

EngineKind engine_from_string(std::string_view name) {
  if (name == "analytic") return EngineKind::analytic;
  if (name == "monte_carlo" || name == "mc") return EngineKind::monte_carlo;
  throw std::invalid_argument(fmt::format("unknown engine '{}' (expected analytic, monte_carlo)", name));
}

namespace {

struct Route {
  Channel side1;
  Channel side2;
  double weight;
};

std::vector<Route> routes(Routing r) {
  if (r == Routing::deterministic) return {{Channel::alice, Channel::bob, 1.0}};
  return {{Channel::alice, Channel::alice, 0.25},
          {Channel::alice, Channel::bob, 0.25},
          {Channel::bob, Channel::alice, 0.25},
          {Channel::bob, Channel::bob, 0.25}};
}

double detector_eff(const SetupModel& s, Channel c) {
  return c == Channel::alice ? s.detector_a.efficiency : s.detector_b.efficiency;
}

// A coincidence class: rate over all delays and delay centre tB - tA.
struct PeakClass {
  double rate;
  double centre_ns;
};

std::vector<PeakClass> peak_classes(const SetupModel& s, const MeasurementSetting& m, double& central_rate,
                                    double& side_rate) {
  const double R = s.pair_rate();
  const double t2 = s.channel_transmission * s.channel_transmission;
  const double dt = s.transcriber.delta_t_ns;
  const double ph0 = s.p_h(0), pv0 = s.p_v(0), ph1 = s.p_h(1), pv1 = s.p_v(1);
  const double pc = ph0 * ph1 + pv0 * pv1;

  double central_pass = 1.0;
  if (m.analyzers && pc > 0.0) {
    const TwoPhotonState rho = s.central_state();
    central_pass = coincidence_probability(rho, m.a, m.b);
  }

  std::vector<PeakClass> out;
  central_rate = 0.0;
  side_rate = 0.0;
  for (const Route& r : routes(s.routing)) {
    if (r.side1 == r.side2) continue;
    const double eff = detector_eff(s, r.side1) * detector_eff(s, r.side2);
    const double base = R * r.weight * t2 * eff;
    const double c = base * pc * central_pass;
    // Photon 1 H (early) with photon 2 V (late): tB - tA = +dt when photon 1 is at Alice.
    const double sign = r.side1 == Channel::alice ? 1.0 : -1.0;
    const double hv = base * ph0 * pv1 * pass_probability(m, r.side1, Polarization::H) *
                      pass_probability(m, r.side2, Polarization::V);
    const double vh = base * pv0 * ph1 * pass_probability(m, r.side1, Polarization::V) *
                      pass_probability(m, r.side2, Polarization::H);
    out.push_back({c, 0.0});
    out.push_back({hv, sign * dt});
    out.push_back({vh, -sign * dt});
    central_rate += c;
    side_rate += hv + vh;
  }
  return out;
}

}  // namespace

namespace {

double pass_of(const SetupModel& s, const MeasurementSetting& m, int photon, Channel side, Polarization pol) {
  return (pol == Polarization::H ? s.p_h(photon) : s.p_v(photon)) * pass_probability(m, side, pol);
}

// Detector arrivals grouped into clusters: both photons of a pair reaching the same
// detector closer than its dead time produce at most one click.
double cluster_rate(const SetupModel& s, const MeasurementSetting& m, Channel x, double dead_ns,
                    const CorrelationProfile& prof) {
  const double R = s.pair_rate();
  const double tq = s.channel_transmission * detector_eff(s, x);
  const double dt = s.transcriber.delta_t_ns;
  double rate = (x == Channel::alice ? s.detector_a : s.detector_b).dark_count_prob_per_ns * 1e9;
  for (const Route& r : routes(s.routing)) {
    const Channel side[2] = {r.side1, r.side2};
    if (side[0] != x && side[1] != x) continue;
    if (side[0] != side[1]) {
      const int i = side[0] == x ? 0 : 1;
      rate += R * r.weight * tq *
              (pass_of(s, m, i, x, Polarization::H) + pass_of(s, m, i, x, Polarization::V));
      continue;
    }
    double merged = 0.0;
    for (Polarization p1 : {Polarization::H, Polarization::V}) {
      for (Polarization p2 : {Polarization::H, Polarization::V}) {
        const double centre = dt * ((p2 == Polarization::V ? 1.0 : 0.0) - (p1 == Polarization::V ? 1.0 : 0.0));
        const double together = dead_ns > 0.0 ? prof.capture(-dead_ns - centre, dead_ns - centre) : 0.0;
        merged += tq * pass_of(s, m, 0, x, p1) * tq * pass_of(s, m, 1, x, p2) * together;
      }
    }
    double single = 0.0;
    for (int i = 0; i < 2; ++i)
      single += tq * (pass_of(s, m, i, x, Polarization::H) + pass_of(s, m, i, x, Polarization::V));
    rate += R * r.weight * (single - merged);
  }
  return rate;
}

constexpr std::array<double, 4> kGaussNode{-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                           0.8611363115940526};
constexpr std::array<double, 4> kGaussWeight{0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                             0.3478548451374538};

template <class F>
double gauss4(const F& f, double a, double b) {
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  double acc = 0.0;
  for (std::size_t i = 0; i < 4; ++i) acc += kGaussWeight[i] * f(c + h * kGaussNode[i]);
  return acc * h;
}

// Accidental density versus delay. A click whose partner was registered on the
// other detector blanks that detector for its dead time.
struct FloorModel {
  const CorrelationProfile& prof;
  std::vector<PeakClass> classes;  // rates normalized to weights
  double base = 0.0;
  double f_a = 0.0;
  double f_b = 0.0;
  double dead_a = 0.0;
  double dead_b = 0.0;
  double reach = 0.0;

  double density(double tau) const {
    double sa = 0.0, sb = 0.0;
    for (const PeakClass& k : classes) {
      if (dead_b > 0.0) sa += k.rate * (prof.cdf(tau - k.centre_ns) - prof.cdf(tau - dead_b - k.centre_ns));
      if (dead_a > 0.0) sb += k.rate * (prof.cdf(tau + dead_a - k.centre_ns) - prof.cdf(tau - k.centre_ns));
    }
    return base * (1.0 - f_a * sa - f_b * sb);
  }

  double integral(double lo, double hi) const {
    if (!(hi > lo)) return 0.0;
    std::vector<double> cuts{lo, hi};
    for (const PeakClass& k : classes)
      for (double step : {k.centre_ns, k.centre_ns + dead_b, k.centre_ns - dead_a})
        for (double e : {step - reach, step + reach})
          if (e > lo && e < hi) cuts.push_back(e);
    std::sort(cuts.begin(), cuts.end());
    auto f = [this](double t) { return density(t); };
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double a = cuts[i], b = cuts[i + 1];
      if (!(b > a)) continue;
      bool near = false;
      for (const PeakClass& k : classes)
        for (double step : {k.centre_ns, k.centre_ns + dead_b, k.centre_ns - dead_a})
          near = near || (b > step - reach && a < step + reach);
      const int n = near ? 256 : 1;
      const double h = (b - a) / n;
      for (int j = 0; j < n; ++j) acc += gauss4(f, a + j * h, a + (j + 1) * h);
    }
    return acc;
  }
};

struct RateModel {
  AnalyticRates rates;
  std::vector<PeakClass> classes;
  double live = 1.0;
};

FloorModel floor_model(const RateModel& rm, const CorrelationProfile& prof, double dead_a, double dead_b) {
  const AnalyticRates& a = rm.rates;
  FloorModel fm{prof, {}};
  fm.base = a.floor_per_ns;
  fm.dead_a = dead_a;
  fm.dead_b = dead_b;
  fm.reach = prof.support_halfwidth(1e-12);
  double total = 0.0;
  for (const PeakClass& c : rm.classes) total += c.rate;
  if (total > 0.0) {
    for (const PeakClass& c : rm.classes)
      if (c.rate > 0.0) fm.classes.push_back({c.rate / total, c.centre_ns});
    const double registered = total * rm.live;
    if (a.singles_a > 0.0) fm.f_a = registered / a.singles_a;
    if (a.singles_b > 0.0) fm.f_b = registered / a.singles_b;
  }
  return fm;
}

RateModel build_rates(const SetupModel& s, const MeasurementSetting& m) {
  s.validate();
  RateModel out;
  AnalyticRates& a = out.rates;
  const double R = s.pair_rate();
  const CorrelationProfile prof = s.profile();
  double photons[2] = {0.0, 0.0};
  for (const Route& r : routes(s.routing)) {
    const Channel side[2] = {r.side1, r.side2};
    for (int i = 0; i < 2; ++i) {
      const double pass = pass_of(s, m, i, side[i], Polarization::H) + pass_of(s, m, i, side[i], Polarization::V);
      photons[static_cast<int>(side[i])] +=
          R * r.weight * s.channel_transmission * detector_eff(s, side[i]) * pass;
    }
  }
  const double dead_a = s.detector_a.dead_time_ns, dead_b = s.detector_b.dead_time_ns;
  a.incident_a = photons[0] + s.detector_a.dark_count_prob_per_ns * 1e9;
  a.incident_b = photons[1] + s.detector_b.dark_count_prob_per_ns * 1e9;
  const double arrivals_a = cluster_rate(s, m, Channel::alice, dead_a, prof);
  const double arrivals_b = cluster_rate(s, m, Channel::bob, dead_b, prof);
  a.live_a = 1.0 / (1.0 + arrivals_a * dead_a * 1e-9);
  a.live_b = 1.0 / (1.0 + arrivals_b * dead_b * 1e-9);
  a.singles_a = arrivals_a * a.live_a;
  a.singles_b = arrivals_b * a.live_b;

  out.classes = peak_classes(s, m, a.central_rate, a.side_rate);
  const double pairs = a.central_rate + a.side_rate;
  a.joint_live = a.live_a * a.live_b / (1.0 - pairs * std::min(dead_a, dead_b) * 1e-9);
  out.live = a.joint_live;
  a.central_rate *= a.joint_live;
  a.side_rate *= a.joint_live;
  const DelayWindow w = s.window();
  for (const PeakClass& c : out.classes)
    a.signal_in_window += c.rate * a.joint_live * prof.capture(w.lo_ns - c.centre_ns, w.hi_ns - c.centre_ns);

  a.floor_per_ns = a.singles_a * a.singles_b * 1e-9;
  const FloorModel fm = floor_model(out, prof, dead_a, dead_b);
  a.accidental_in_window = fm.integral(w.lo_ns, w.hi_ns);
  const auto floor = s.floor_regions();
  const double floor_counts = fm.integral(floor[0].lo_ns, floor[0].hi_ns) + fm.integral(floor[1].lo_ns, floor[1].hi_ns);
  a.floor_estimate_in_window = floor_counts * w.width() / s.floor_width();
  return out;
}

}  // namespace

AnalyticRates analytic_rates(const SetupModel& s, const MeasurementSetting& m) { return build_rates(s, m).rates; }

std::vector<double> expected_histogram(const SetupModel& s, const MeasurementSetting& m, double bin_width_ns,
                                       double max_delay_ns, double duration_s) {
  const RateModel rm = build_rates(s, m);
  const CorrelationProfile prof = s.profile();
  const FloorModel fm = floor_model(rm, prof, s.detector_a.dead_time_ns, s.detector_b.dead_time_ns);
  const double reach = prof.support_halfwidth(1e-12);
  CoincidenceHistogram layout(bin_width_ns, max_delay_ns);
  std::vector<double> out(layout.size(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double lo = layout.bin_center(i) - 0.5 * bin_width_ns;
    const double hi = lo + bin_width_ns;
    out[i] = gauss4([&fm](double t) { return fm.density(t); }, lo, hi) * duration_s;
    for (const PeakClass& c : rm.classes) {
      if (c.rate <= 0.0 || hi < c.centre_ns - reach || lo > c.centre_ns + reach) continue;
      out[i] += c.rate * rm.live * duration_s * prof.capture(lo - c.centre_ns, hi - c.centre_ns);
    }
  }
  return out;
}

SettingCounts AnalyticEngine::measure(const SetupModel& setup, const MeasurementSetting& setting,
                                      double duration_s, std::uint64_t, std::string_view) const {
  const AnalyticRates a = analytic_rates(setup, setting);
  return {a.window_rate() * duration_s, a.floor_estimate_in_window * duration_s, a.singles_a * duration_s,
          a.singles_b * duration_s, duration_s};
}

SettingCounts MonteCarloEngine::measure(const SetupModel& setup, const MeasurementSetting& setting,
                                        double duration_s, std::uint64_t seed, std::string_view label) const {
  McOptions o;
  o.duration_s = duration_s;
  o.seed = seed;
  o.label = std::string(label);
  o.max_candidates_per_segment = max_candidates_;
  const McResult r = run_monte_carlo(setup, setting, o);
  return {static_cast<double>(r.window_counts), r.accidental_estimate(), static_cast<double>(r.singles_a),
          static_cast<double>(r.singles_b), r.duration_s};
}

std::unique_ptr<CountEngine> make_engine(EngineKind kind) {
  if (kind == EngineKind::analytic) return std::make_unique<AnalyticEngine>();
  return std::make_unique<MonteCarloEngine>();
}

}  // namespace polent
