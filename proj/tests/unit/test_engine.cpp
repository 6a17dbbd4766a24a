#include <doctest.h>

#include <polent/engine.hpp>
#include <polent/scenario.hpp>

#include <cmath>
#include <numbers>
#include <numeric>

#include "oracles.hpp"

using namespace polent;
using std::numbers::pi;

namespace {

SetupModel ideal_phi_minus(SetupModel s) {
  s.transcriber.phi2 = pi;
  s.detector_a = DetectorSpec{};
  s.detector_b = DetectorSpec{};
  return s;
}

double poisson_z(double observed, double expected) { return std::abs(observed - expected) / std::sqrt(expected); }

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("floor density without dead time is the product of singles") {
    SetupModel s = preset("fig5_540MHz").setup();
    s.detector_a.dead_time_ns = 0.0;
    s.detector_b.dead_time_ns = 0.0;
    const AnalyticRates r = analytic_rates(s, MeasurementSetting::none());
    CHECK(r.floor_per_ns == doctest::Approx(accidental_rate(r.singles_a, r.singles_b, 1.0)).epsilon(1e-12));
    CHECK(r.floor_estimate_in_window ==
          doctest::Approx(accidental_rate(r.singles_a, r.singles_b, s.window().width())).epsilon(1e-6));
    CHECK(r.live_a == 1.0);
    CHECK(r.joint_live == doctest::Approx(1.0));
  }

  TEST_CASE("monte carlo floor matches the analytic floor") {
    const SetupModel s = preset("fig5_25MHz").setup();
    const AnalyticRates r = analytic_rates(s, MeasurementSetting::none());
    McOptions o;
    o.duration_s = 5.0;
    o.seed = 71;
    const McResult mc = run_monte_carlo(s, MeasurementSetting::none(), o);
    const double expected_floor = r.floor_estimate_in_window * s.floor_width() / s.window().width() * o.duration_s;
    CHECK(poisson_z(static_cast<double>(mc.floor_counts), expected_floor) < 3.0);
    CHECK(poisson_z(static_cast<double>(mc.singles_a), r.singles_a * o.duration_s) < 3.0);
    CHECK(poisson_z(static_cast<double>(mc.window_counts), r.window_rate() * o.duration_s) < 3.0);
  }

  TEST_CASE("monte carlo window counts agree with the analytic engine") {
    const SetupModel s = preset("fig5_540MHz").setup();
    const AnalyticEngine an;
    const MonteCarloEngine mc;
    int k = 0;
    for (double b : {pi / 8, -pi / 8, 0.0, pi / 16}) {
      const MeasurementSetting m = MeasurementSetting::with(AnalyzerSetting(pi / 8), AnalyzerSetting(b));
      const SettingCounts e = an.measure(s, m, 2.0, 1, "x");
      const SettingCounts o = mc.measure(s, m, 2.0, 73, "setting." + std::to_string(k++));
      CHECK(poisson_z(o.counts, e.counts) < 3.0);
    }
  }

  TEST_CASE("ideal central state and analytic visibility") {
    const SetupModel s = ideal_phi_minus(preset("fig5_540MHz").setup());
    const TwoPhotonState st = s.central_state();
    CHECK(fidelity(st, pi) == doctest::Approx((1.0 + s.coherence_factor()) / 2.0).epsilon(1e-12));
    const double hi = analytic_rates(s, MeasurementSetting::with(AnalyzerSetting(pi / 8), AnalyzerSetting(-pi / 8))).signal_in_window;
    const double lo = analytic_rates(s, MeasurementSetting::with(AnalyzerSetting(pi / 8), AnalyzerSetting(pi / 8))).signal_in_window;
    CHECK((hi - lo) / (hi + lo) == doctest::Approx(s.coherence_factor()).epsilon(1e-9));
  }

  TEST_CASE("window covering all three peaks halves the visibility") {
    // Central mass 1/2 with visibility c; the HV and VH side branches add a flat 1/8
    // at Alice D, so V_all = (c/4) / (1/4 + 1/4) = c/2.
    SetupModel s = ideal_phi_minus(preset("fig5_540MHz").setup());
    const auto vis = [&](const SetupModel& m) {
      const double hi = analytic_rates(m, MeasurementSetting::with(AnalyzerSetting(pi / 8), AnalyzerSetting(-pi / 8))).signal_in_window;
      const double lo = analytic_rates(m, MeasurementSetting::with(AnalyzerSetting(pi / 8), AnalyzerSetting(pi / 8))).signal_in_window;
      return (hi - lo) / (hi + lo);
    };
    s.window_width_ns = 20.0;
    const double windowed = vis(s);
    CHECK(windowed == doctest::Approx(s.coherence_factor()).epsilon(1e-6));
    s.window_width_ns = 200.0;
    CHECK(vis(s) == doctest::Approx(0.5 * windowed).epsilon(1e-6));
  }

  TEST_CASE("expected histogram integrates to the monte carlo histogram total") {
    const ScenarioConfig cfg = preset("fig3_540MHz");
    const SetupModel s = cfg.setup();
    McOptions o;
    o.duration_s = 0.5;
    o.seed = 79;
    o.histogram = true;
    o.bin_width_ns = 0.05;
    o.max_delay_ns = 100.0;
    const McResult mc = run_monte_carlo(s, MeasurementSetting::none(), o);
    const std::vector<double> e = expected_histogram(s, MeasurementSetting::none(), 0.05, 100.0, 0.5);
    REQUIRE(e.size() == mc.histogram->size());
    const double total = std::accumulate(e.begin(), e.end(), 0.0);
    CHECK(poisson_z(static_cast<double>(mc.histogram->total()), total) < 3.0);
    // central peak region
    double ec = 0.0, mcc = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i)
      if (std::abs(mc.histogram->bin_center(i)) < 3.0) {
        ec += e[i];
        mcc += static_cast<double>(mc.histogram->count(i));
      }
    CHECK(poisson_z(mcc, ec) < 3.0);
  }

  TEST_CASE("monte carlo is reproducible per seed and label") {
    const SetupModel s = preset("fig5_540MHz").setup();
    McOptions o;
    o.duration_s = 0.05;
    o.seed = 83;
    o.keep_streams = true;
    const McResult a = run_monte_carlo(s, MeasurementSetting::none(), o);
    const McResult b = run_monte_carlo(s, MeasurementSetting::none(), o);
    CHECK(a.stream_a == b.stream_a);
    CHECK(a.stream_b == b.stream_b);
    CHECK(a.window_counts == b.window_counts);
    o.label = "other";
    const McResult c = run_monte_carlo(s, MeasurementSetting::none(), o);
    CHECK(c.stream_a != a.stream_a);
    CHECK(count_coincidences(times_of(a.stream_a), times_of(a.stream_b), s.window()) == a.window_counts);
  }
}
