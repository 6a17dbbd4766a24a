#include <polent/orchestrator.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"

using namespace polent;
using std::numbers::pi;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    passed = passed && ok;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome ac1_transcriber_oracle() {
  Outcome o;
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    ProductInput in;
    auto photon = [&](Complex& a, Complex& b) {
      a = Complex(n(rng), n(rng));
      b = Complex(n(rng), n(rng));
      const double s = std::sqrt(std::norm(a) + std::norm(b));
      a /= s;
      b /= s;
    };
    photon(in.alpha1, in.beta1);
    photon(in.alpha2, in.beta2);
    TranscriberSpec spec;
    spec.phi1 = 2.0 * pi * u(rng);
    spec.phi2 = 2.0 * pi * u(rng);
    const PostSelection p = post_select_central(apply_transcriber(in, spec));
    const oracle::PostSelected ref = oracle::propagate(in, spec);
    double norm = 0.0;
    for (const auto& a : ref.psi) norm += std::norm(a);
    // closed form: alpha|HH> + beta e^{i phi}|VV>
    const Complex hh = ref.psi[kHH] / std::sqrt(norm);
    const Complex vv = ref.psi[kVV] / std::sqrt(norm);
    const double ref_alpha = std::abs(hh), ref_beta = std::abs(vv);
    worst = std::max({worst, std::abs(p.alpha - ref_alpha), std::abs(p.beta - ref_beta),
                      std::abs(p.probability - ref.probability)});
    if (ref_alpha > 1e-6 && ref_beta > 1e-6)
      worst = std::max(worst, std::abs(std::polar(1.0, p.phi) - vv / std::abs(vv) * std::conj(hh) / std::abs(hh)));
  }
  const double t = seconds_since(t0);
  o.check(worst < 1e-10, fmt::format("max error {:.2e} over 1000 inputs", worst));
  o.check(t < 1.0, fmt::format("runtime {:.3f} s", t));
  return o;
}

Outcome ac2_histograms() {
  Outcome o;
  const std::array<std::pair<const char*, std::pair<double, double>>, 3> presets{
      {{"fig3_100GHz", {0.23, 0.10}}, {"fig3_540MHz", {0.80, 0.15}}, {"fig3_25MHz", {15.6, 0.15}}}};
  for (const auto& [name, fwhm] : presets) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunRecord r = run_scenario(preset(name));
    const double t = seconds_since(t0);
    const HistogramResult& h = *r.histogram;
    if (!h.peaks) {
      o.check(false, fmt::format("{}: {}", name, h.peak_error));
      continue;
    }
    const PeakMetrics& p = *h.peaks;
    double pairs = 0.0;
    for (double a : p.areas) pairs += a;
    const double dt = r.config.transcriber.delta_t_ns;
    const std::array<double, 3> want{-dt, 0.0, dt};
    bool pos_ok = true;
    for (std::size_t i = 0; i < 3; ++i)
      pos_ok = pos_ok && std::abs(p.positions[i] - want[i]) <= std::max(2.0 * h.histogram.bin_width(), 0.1 * p.fwhm[i]);
    const double ratio_dev = std::abs(p.central_to_side_ratio - h.expected_ratio);
    const double fw = p.fwhm[1];
    o.check(pairs >= 1e5, fmt::format("{}: {:.0f} correlated pairs", name, pairs));
    o.check(pos_ok, fmt::format("peaks at {:.3f} {:.4f} {:.3f} ns", p.positions[0], p.positions[1], p.positions[2]));
    o.check(ratio_dev <= 3.0 * p.ratio_error,
            fmt::format("ratio {:.4f} +- {:.4f}", p.central_to_side_ratio, p.ratio_error));
    o.check(std::abs(fw / fwhm.first - 1.0) <= fwhm.second,
            fmt::format("central FWHM {:.4f} ns (target {} +- {:.0f}%)", fw, fwhm.first, 100.0 * fwhm.second));
    o.check(t < 60.0, fmt::format("{:.1f} s", t));
  }
  return o;
}

Outcome ac3_ideal_chsh() {
  Outcome o;
  const ScenarioConfig an_cfg = preset("ideal");
  const RunRecord an = run_scenario(an_cfg);
  const double bound = 2.0 * std::numbers::sqrt2;
  o.check(std::abs(an.bell->chsh.s - bound) < 1e-9, fmt::format("analytic S {:.12f}", an.bell->chsh.s));

  double min_rate = std::numeric_limits<double>::infinity();
  for (const auto& c : an.bell->chsh_counts) min_rate = std::min(min_rate, (c[0] + c[1] + c[2] + c[3]) / an_cfg.duration_s);
  ScenarioConfig mc_cfg = an_cfg;
  mc_cfg.engine = EngineKind::monte_carlo;
  mc_cfg.duration_s = 1e4 / min_rate;
  const RunRecord mc = run_scenario(mc_cfg);
  double min_total = std::numeric_limits<double>::infinity();
  for (const auto& c : mc.bell->chsh_counts) min_total = std::min(min_total, c[0] + c[1] + c[2] + c[3]);
  o.check(std::abs(mc.bell->chsh.s - an.bell->chsh.s) < 3.0 * mc.bell->chsh.error,
          fmt::format("MC S {:.4f} +- {:.4f} with >= {:.0f} coincidences per setting", mc.bell->chsh.s,
                      mc.bell->chsh.error, min_total));
  return o;
}

Outcome ac4_table1() {
  Outcome o;
  const Table1Result t = reproduce_table1();
  o.check(t.complete, t.complete ? "all rows ran" : t.error);
  for (const auto& r : t.rows) {
    const double f_dev = r.fidelity - (1.0 + r.v_raw) / 2.0;
    o.check(r.v_ok, fmt::format("{} V_raw {:.4f} vs {:.3f}", r.reference.preset, r.v_raw, r.reference.v_raw));
    o.check(r.s_ok, fmt::format("S {:.4f} vs {:.2f}", r.s, r.reference.s));
    o.check(r.f_ok, fmt::format("F {:.4f} (F - (1+V)/2 = {:+.4f})", r.fidelity, f_dev));
  }
  return o;
}

Outcome ac5_phase_sweep() {
  Outcome o;
  std::vector<double> phis;
  for (int i = 0; i < 16; ++i) phis.push_back(2.0 * pi * i / 16.0);
  const auto runs = sweep(preset("fig5_sweep"), "transcriber.phi2", phis);
  std::size_t imax = 0, imin = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const double n = runs[i].coincidence->counts[0].counts;
    if (n > runs[imax].coincidence->counts[0].counts) imax = i;
    if (n < runs[imin].coincidence->counts[0].counts) imin = i;
  }
  o.check(imax == 0 && imin == 8, fmt::format("analytic max at {:.4f} rad, min at {:.4f} rad", phis[imax], phis[imin]));

  int runs_total = 0, net_above = 0;
  for (const char* name : {"fig5_100GHz", "fig5_540MHz", "fig5_25MHz"}) {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      ScenarioConfig c = preset(name);
      c.seed = seed;
      c.duration_s = 1.0;
      const RunRecord r = run_scenario(c);
      ++runs_total;
      if (r.phase_scan->fringe.net.fit.visibility > r.phase_scan->fringe.raw_fit.visibility) ++net_above;
    }
  }
  o.check(net_above == runs_total, fmt::format("net > raw on {}/{} runs of 1 s per point", net_above, runs_total));

  const RunRecord r = run_scenario(preset("fig5_25MHz"));
  const FringeResult& f = r.phase_scan->fringe;
  o.check(f.net.fit.visibility >= 0.97,
          fmt::format("fig5_25MHz V_net {:.4f} +- {:.4f} (V_raw {:.4f}) at {} s per point", f.net.fit.visibility,
                      f.net.fit.visibility_error, f.raw_fit.visibility, r.config.duration_s));
  return o;
}

Outcome ac6_servo() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const RunRecord r = run_scenario(preset("servo"));
  const double t = seconds_since(t0);
  const ServoResult& s = *r.servo;
  o.check(s.closed_rms < pi / 100.0, fmt::format("closed-loop rms {:.5f} rad", s.closed_rms));
  o.check(s.open_final_rms > pi, fmt::format("open-loop rms {:.3f} rad after {} s", s.open_final_rms,
                                             r.config.servo_test.open_duration_s));
  o.check(s.settled && s.settle_ms < 1.0, fmt::format("pi step settles in {:.4f} ms", s.settle_ms));
  o.check(t < 10.0, fmt::format("{:.2f} s", t));
  return o;
}

Outcome ac7_tuning() {
  Outcome o;
  const PhaseMatchingSpec pm;
  const TuningPoint d = tuning_curve(387.0, pm);
  o.check(std::abs(d.lambda_signal_nm - 1560.0) < 1e-9 && std::abs(d.lambda_idler_nm - 1560.0) < 1e-9,
          fmt::format("387 K: {:.6f} / {:.6f} nm", d.lambda_signal_nm, d.lambda_idler_nm));
  const double split = std::abs(tuning_curve(384.0, pm).splitting_nm());
  o.check(split > 100.0, fmt::format("384 K splitting {:.2f} nm", split));
  std::mt19937_64 rng(1007);
  std::uniform_real_distribution<double> u(360.0, 387.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const TuningPoint t = tuning_curve(u(rng), pm);
    worst = std::max(worst, std::abs(1.0 / t.lambda_signal_nm + 1.0 / t.lambda_idler_nm - 1.0 / 780.0));
  }
  o.check(worst < 1e-9, fmt::format("energy conservation error {:.2e} /nm", worst));
  return o;
}

ScenarioConfig random_config(std::mt19937_64& rng, int index) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int family = index % 3;
  ScenarioConfig c = preset(family == 0 ? "table1_100GHz" : family == 1 ? "table1_540MHz" : "table1_25MHz");
  c.name = fmt::format("random_{}", index);
  c.seed = 5000 + static_cast<std::uint64_t>(index);
  c.filter.bandwidth_fwhm_mhz *= 0.8 + 0.6 * u(rng);
  c.pump.power_mw *= 0.5 + 1.5 * u(rng);
  c.channel_transmission = 0.3 + 0.7 * u(rng);
  for (DetectorSpec* d : {&c.detector_a, &c.detector_b}) {
    d->efficiency = 0.3 + 0.7 * u(rng);
    d->dark_count_prob_per_ns = 1e-6 * u(rng);
    d->dead_time_ns = 1000.0 * u(rng);
  }
  c.transcriber.phi2 = pi + 0.4 * (u(rng) - 0.5);
  const double a1 = std::sqrt(0.3 + 0.4 * u(rng)), a2 = std::sqrt(0.3 + 0.4 * u(rng));
  c.input = {a1, std::sqrt(1.0 - a1 * a1), a2, std::sqrt(1.0 - a2 * a2)};
  c.servo_feed = u(rng) < 0.5;
  c.bell.bob_points = 8;
  return c;
}

Outcome ac8_cross_validation() {
  Outcome o;
  std::mt19937_64 rng(1013);
  int agree = 0;
  std::string worst;
  double worst_z = 0.0;
  for (int i = 0; i < 20; ++i) {
    ScenarioConfig c = random_config(rng, i);
    const RunRecord an = run_scenario(c);
    double min_rate = std::numeric_limits<double>::infinity();
    for (const auto& s : an.bell->chsh_counts) min_rate = std::min(min_rate, (s[0] + s[1] + s[2] + s[3]) / c.duration_s);
    const std::size_t settings = c.bell.alice_bases.size() * c.bell.bob_points + 16;
    const double pair_budget = 3e7 / (an.pair_rate * static_cast<double>(settings));
    c.duration_s = std::min(4000.0 / min_rate, pair_budget);
    c.engine = EngineKind::monte_carlo;
    const RunRecord mc = run_scenario(c);
    const RunRecord an_same = [&] {
      ScenarioConfig a = c;
      a.engine = EngineKind::analytic;
      return run_scenario(a);
    }();
    const double zs = std::abs(mc.bell->chsh.s - an_same.bell->chsh.s) / mc.bell->chsh.error;
    const double zv = std::abs(mc.bell->v_raw - an_same.bell->v_raw) / mc.bell->v_raw_error;
    if (zs < 3.0 && zv < 3.0) ++agree;
    if (std::max(zs, zv) > worst_z) {
      worst_z = std::max(zs, zv);
      worst = fmt::format("{} (S {:.4f}/{:.4f}, V {:.4f}/{:.4f})", c.name, mc.bell->chsh.s, an_same.bell->chsh.s,
                          mc.bell->v_raw, an_same.bell->v_raw);
    }
  }
  o.check(agree == 20, fmt::format("{}/20 configs within 3 sigma, largest deviation {:.2f} sigma at {}", agree, worst_z,
                                   worst));

  bool exact = true;
  std::size_t streams = 0;
  for (const char* name : {"fig3_100GHz", "fig3_540MHz", "fig5_25MHz"}) {
    const McResult ts = simulate_timestamps(preset(name), 0.01);
    std::vector<double> a = times_of(ts.stream_a), b = times_of(ts.stream_b);
    a.resize(std::min<std::size_t>(a.size(), 1000));
    b.resize(std::min<std::size_t>(b.size(), 1000));
    const double reach = std::min(a.back(), b.back());
    const CoincidenceHistogram h = build_histogram(a, b, 0.05, reach);
    const auto ref = oracle::all_pairs(a, b, 0.05, reach);
    std::uint64_t total = 0;
    for (const auto& [k, n] : ref) {
      const auto idx = static_cast<std::size_t>(k + static_cast<long long>(h.size() / 2));
      exact = exact && h.count(idx) == n;
      total += n;
    }
    exact = exact && h.total() == total;
    exact = exact && count_coincidences(a, b, {-1.0, 1.0}) == oracle::all_pairs_in(a, b, -1.0, 1.0);
    ++streams;
  }
  std::mt19937_64 r2(1019);
  std::uniform_real_distribution<double> span(0.0, 1e5);
  for (int k = 0; k < 10; ++k) {
    std::vector<double> a(1000), b(1000);
    for (auto& x : a) x = span(r2);
    for (auto& x : b) x = span(r2);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const CoincidenceHistogram h = build_histogram(a, b, 1.0, 500.0);
    const auto ref = oracle::all_pairs(a, b, 1.0, 500.0);
    std::uint64_t total = 0;
    for (const auto& [key, n] : ref) {
      exact = exact && h.count(static_cast<std::size_t>(key + static_cast<long long>(h.size() / 2))) == n;
      total += n;
    }
    exact = exact && h.total() == total;
    ++streams;
  }
  o.check(exact, fmt::format("two-pointer histogram equals all-pairs on {} stream pairs of 1000 events", streams));
  return o;
}

Outcome ac9_determinism() {
  Outcome o;
  std::size_t same = 0;
  std::vector<std::string> differing;
  for (const auto& name : preset_names()) {
    ScenarioConfig c = preset(name);
    if (c.engine == EngineKind::monte_carlo) c.duration_s = std::min(c.duration_s, 1.0);
    const RunRecord a = run_scenario(c);
    const RunRecord b = run_scenario(c);
    const McResult sa = simulate_timestamps(c, 0.01);
    const McResult sb = simulate_timestamps(c, 0.01);
    if (a.to_json(false) == b.to_json(false) && sa.stream_a == sb.stream_a && sa.stream_b == sb.stream_b)
      ++same;
    else
      differing.push_back(name);
  }
  std::string list;
  for (const auto& d : differing) list += " " + d;
  o.check(differing.empty(), fmt::format("{}/{} presets bit-identical{}", same, preset_names().size(),
                                         differing.empty() ? "" : " (differ:" + list + ")"));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC1", ac1_transcriber_oracle}, {"AC2", ac2_histograms}, {"AC3", ac3_ideal_chsh},
      {"AC4", ac4_table1},             {"AC5", ac5_phase_sweep}, {"AC6", ac6_servo},
      {"AC7", ac7_tuning},             {"AC8", ac8_cross_validation}, {"AC9", ac9_determinism}};
  bool all = true;
  for (const auto& [id, run] : criteria) {
    Outcome out;
    try {
      out = run();
    } catch (const std::exception& e) {
      out.passed = false;
      out.detail = fmt::format("exception: {}", e.what());
    }
    all = all && out.passed;
    fmt::print("{} {}: {}\n", id, out.passed ? "PASS" : "FAIL", out.detail);
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
