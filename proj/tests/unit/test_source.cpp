#include <doctest.h>

#include <polent/source.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

using namespace polent;

namespace {

FilterSpec filter(double mhz, Lineshape shape = Lineshape::lorentzian) {
  FilterSpec f;
  f.bandwidth_fwhm_mhz = mhz;
  f.lineshape = shape;
  return f;
}

}  // namespace

TEST_SUITE("source") {
  TEST_CASE("coherence times") {
    CHECK(coherence_time_ns(filter(540.0)) == doctest::Approx(0.8).epsilon(0.25));
    CHECK(coherence_time_ns(filter(25.0)) == doctest::Approx(15.6).epsilon(0.25));
    CHECK(coherence_time_ns(filter(50.0)) == doctest::Approx(0.5 * coherence_time_ns(filter(25.0))).epsilon(1e-14));
    // Laplace-shaped intensity correlation: half maximum at |t| = tau ln2 / (2 ln2 / tau_c)
    CHECK(coherence_time_ns(filter(25.0)) == doctest::Approx(2.0 * std::log(2.0) / (std::numbers::pi * 25e6) * 1e9));
    for (Lineshape s : {Lineshape::lorentzian, Lineshape::gaussian, Lineshape::flat_top})
      for (double bw : {1.0, 25.0, 540.0, 125000.0})
        CHECK(coherence_time_ns(filter(bw, s)) * bw * 1e-3 == doctest::Approx(time_bandwidth_constant(s)).epsilon(1e-14));
    CHECK_THROWS_AS(coherence_time_ns(filter(0.0)), std::invalid_argument);
  }

  TEST_CASE("tuning curve") {
    const PhaseMatchingSpec pm;
    const TuningPoint deg = tuning_curve(387.0, pm);
    CHECK(deg.lambda_signal_nm == doctest::Approx(1560.0));
    CHECK(deg.lambda_idler_nm == doctest::Approx(1560.0));
    CHECK(std::abs(tuning_curve(384.0, pm).splitting_nm()) > 100.0);
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(370.0, 387.0);
    for (int k = 0; k < 100; ++k) {
      const TuningPoint t = tuning_curve(u(rng), pm);
      CHECK(std::abs(1.0 / t.lambda_signal_nm + 1.0 / t.lambda_idler_nm - 1.0 / 780.0) < 1e-9);
    }
    double last = 0.0;
    for (double t = 387.0; t >= 375.0; t -= 0.5) {
      const double s = tuning_curve(t, pm).splitting_nm();
      CHECK(s >= last);
      last = s;
    }
  }

  TEST_CASE("pair rate and brightness") {
    PumpSpec pump;
    pump.power_mw = 1.0;
    CHECK(pair_rate(pump, filter(4e6)) == doctest::Approx(1e10));
    CHECK(pair_rate(pump, filter(2e6)) == doctest::Approx(5e9));
    const std::vector<double> unit{1.0};
    CHECK(brightness(1.0, 1.0, 1.0, unit).brightness == doctest::Approx(1.0));
    const double product = 2000.0 / (960.0 * 0.02 * 125000.0);
    const std::vector<double> eff{std::sqrt(product), std::sqrt(product)};
    CHECK(brightness(2000.0, 0.02, 125000.0, eff).brightness == doctest::Approx(960.0));
    CHECK(brightness(2000.0, 0.01, 125000.0, eff).brightness ==
          doctest::Approx(2.0 * brightness(2000.0, 0.02, 125000.0, eff).brightness));
    CHECK_THROWS_AS(brightness(1.0, 0.0, 1.0, unit), std::invalid_argument);
  }

  TEST_CASE("emission counts follow the rate") {
    PumpSpec pump;
    pump.power_mw = 0.0;
    CHECK(emission_process(pump, filter(540.0), 0.01, 1).pairs.empty());
    pump.power_mw = 1.0;
    const FilterSpec f = filter(540.0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const EmissionStream s = emission_process(pump, f, 0.01, seed);
      const double expected = s.rate_per_s * 0.01;
      CHECK(std::abs(static_cast<double>(s.pairs.size()) - expected) < 4.0 * std::sqrt(expected));
      CHECK(std::is_sorted(s.pairs.begin(), s.pairs.end(),
                           [](const PairRecord& a, const PairRecord& b) { return a.time_ns < b.time_ns; }));
      CHECK(s.pairs.back().time_ns < 1e7);
    }
  }

  TEST_CASE("mean pairs per coherence window at the 25 MHz operating point") {
    PumpSpec pump;
    pump.power_mw = 7.0;
    FilterSpec f = filter(25.0);
    f.peak_transmission = 0.72;
    const EmissionStream s = emission_process(pump, f, 1e-4, 3);
    CHECK(s.mean_pairs_per_coherence_time == doctest::Approx(s.rate_per_s * coherence_time_ns(f) * 1e-9));
    CHECK(s.mean_pairs_per_coherence_time < 2e-2);
    CHECK_FALSE(s.multi_pair_warning);
  }

  TEST_CASE("inter-arrival times are exponential") {
    PumpSpec pump;
    pump.power_mw = 1.0;
    for (std::uint64_t seed : {5u, 6u, 7u}) {
      const EmissionStream s = emission_process(pump, filter(540.0), 0.002, seed);
      std::vector<double> gaps;
      for (std::size_t i = 1; i < s.pairs.size(); ++i) gaps.push_back(s.pairs[i].time_ns - s.pairs[i - 1].time_ns);
      std::sort(gaps.begin(), gaps.end());
      const double rate = s.rate_per_s * 1e-9;
      const double n = static_cast<double>(gaps.size());
      double d = 0.0;
      for (std::size_t i = 0; i < gaps.size(); ++i) {
        const double cdf = 1.0 - std::exp(-rate * gaps[i]);
        d = std::max({d, std::abs(cdf - static_cast<double>(i) / n), std::abs(cdf - static_cast<double>(i + 1) / n)});
      }
      CHECK(d < 1.628 / std::sqrt(n));
    }
  }

  TEST_CASE("pump phase coherence decays with the pair coherence time") {
    PumpSpec pump;
    pump.power_mw = 0.032;  // 1e7 pairs/s through a 125 GHz filter
    const EmissionStream s = emission_process(pump, filter(125000.0, Lineshape::gaussian), 0.3, 47);
    for (double lag : {100.0, 1000.0, 3000.0}) {
      std::vector<double> c;
      double expected = 0.0;
      std::size_t i = 0;
      while (c.size() < 100000 && i < s.pairs.size()) {
        std::size_t j = i + 1;
        while (j < s.pairs.size() && s.pairs[j].time_ns - s.pairs[i].time_ns < lag) ++j;
        if (j >= s.pairs.size()) break;
        c.push_back(std::cos(s.pairs[j].pump_phase_rad - s.pairs[i].pump_phase_rad));
        expected += std::exp(-(s.pairs[j].time_ns - s.pairs[i].time_ns) / pump.pair_coherence_time_ns);
        i = j + 1;
      }
      const double n = static_cast<double>(c.size());
      double mean = 0.0, var = 0.0;
      for (double x : c) mean += x / n;
      for (double x : c) var += (x - mean) * (x - mean) / (n - 1.0);
      expected /= n;
      CHECK(n > 50000.0);
      CHECK(std::abs(mean - expected) < 3.0 * std::sqrt(var / n));
    }
  }

  TEST_CASE("sampled delay spread matches the double exponential") {
    const double tau_c = coherence_time_ns(filter(25.0));
    const double b = tau_c / (2.0 * std::log(2.0));
    Rng rng(53);
    const int n = 200000;
    double acc = 0.0, acc2 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double x = std::abs(sample_time_difference(Lineshape::lorentzian, tau_c, rng));
      acc += x;
      acc2 += x * x;
    }
    const double mean = acc / n;
    const double sd = std::sqrt(acc2 / n - mean * mean);
    CHECK(std::abs(mean - b) < 3.0 * sd / std::sqrt(static_cast<double>(n)));
    CHECK(mean_abs_time_difference(Lineshape::lorentzian, tau_c) == doctest::Approx(b));
  }

  TEST_CASE("pair record format") {
    std::ostringstream out;
    const std::vector<PairRecord> p{{1.5, 0.25}, {2.0, -0.5}};
    write_pair_records(out, p);
    CHECK(out.str() == "time_ns,pump_phase_rad\n1.5,0.25\n2,-0.5\n");
  }
}
