#include <doctest.h>

#include <polent/detection.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "oracles.hpp"

using namespace polent;

namespace {

std::vector<double> uniform_stream(std::size_t n, double span, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, span);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_SUITE("detection") {
  TEST_CASE("ideal detector is the identity") {
    const std::vector<double> in = uniform_stream(500, 1e6, 1);
    Rng rng(2);
    const auto out = detect(in, DetectorSpec{1.0, 0.0, 0.0, 0.0}, Channel::alice, 1e6, rng);
    REQUIRE(out.size() == in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
      CHECK(out[i].time_ns == in[i]);
      CHECK(out[i].origin == Origin::photon);
    }
  }

  TEST_CASE("dark counts") {
    Rng rng(3);
    const auto out = detect({}, DetectorSpec{1.0, 1e-6, 0.0, 0.0}, Channel::bob, 1e9, rng);
    CHECK(std::abs(static_cast<double>(out.size()) - 1000.0) < 4.0 * std::sqrt(1000.0));
    for (const auto& r : out) CHECK(r.origin == Origin::dark);
  }

  TEST_CASE("efficiency thinning") {
    const std::vector<double> in = uniform_stream(100000, 1e9, 4);
    Rng rng(5);
    const auto out = detect(in, DetectorSpec{0.2, 0.0, 0.0, 0.0}, Channel::alice, 1e9, rng);
    const double sigma = std::sqrt(100000.0 * 0.2 * 0.8);
    CHECK(std::abs(static_cast<double>(out.size()) - 20000.0) < 3.0 * sigma);
  }

  TEST_CASE("dead time and jitter") {
    const std::vector<double> in = uniform_stream(20000, 1e7, 6);
    Rng rng(7);
    const auto dead = detect(in, DetectorSpec{1.0, 0.0, 0.0, 1000.0}, Channel::alice, 1e7, rng);
    for (std::size_t i = 1; i < dead.size(); ++i) CHECK(dead[i].time_ns - dead[i - 1].time_ns >= 1000.0);
    // non-paralyzable: rate / (1 + rate * tau)
    const double expected = 20000.0 / (1.0 + 2e-3 * 1000.0);
    CHECK(std::abs(static_cast<double>(dead.size()) - expected) < 0.03 * expected);

    const std::vector<double> sparse = uniform_stream(20000, 1e9, 8);
    Rng jr(9);
    const auto jit = detect(sparse, DetectorSpec{1.0, 0.0, 0.05, 0.0}, Channel::alice, 1e9, jr);
    REQUIRE(jit.size() == sparse.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < jit.size(); ++i) acc += (jit[i].time_ns - sparse[i]) * (jit[i].time_ns - sparse[i]);
    CHECK(std::sqrt(acc / 20000.0) == doctest::Approx(0.05).epsilon(0.03));
    CHECK(std::is_sorted(jit.begin(), jit.end(),
                         [](const TimestampRecord& a, const TimestampRecord& b) { return a.time_ns < b.time_ns; }));
  }

  TEST_CASE("same seed gives the same stream") {
    const std::vector<double> in = uniform_stream(5000, 1e7, 10);
    const DetectorSpec spec = DetectorSpec::ingaas();
    Rng r1(11), r2(11);
    CHECK(detect(in, spec, Channel::bob, 1e7, r1) == detect(in, spec, Channel::bob, 1e7, r2));
  }

  TEST_CASE("invalid detector") {
    Rng rng(1);
    CHECK_THROWS_AS(detect({}, DetectorSpec{1.5, 0.0, 0.0, 0.0}, Channel::alice, 1.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(detect({}, DetectorSpec{1.0, -1.0, 0.0, 0.0}, Channel::alice, 1.0, rng), std::invalid_argument);
  }

  TEST_CASE("single event histogram") {
    const std::vector<double> a{5.0}, b{5.0};
    const CoincidenceHistogram h = build_histogram(a, b, 0.1, 10.0);
    CHECK(h.total() == 1);
    CHECK(h.bin_center(h.size() / 2) == 0.0);
    CHECK(h.count(h.size() / 2) == 1);
  }

  TEST_CASE("two-pointer histogram equals the all-pairs oracle") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const std::vector<double> a = uniform_stream(1000, 2e4, 100 + seed);
      std::vector<double> b = uniform_stream(1000, 2e4, 200 + seed);
      const CoincidenceHistogram h = build_histogram(a, b, 0.5, 100.0);
      const auto ref = oracle::all_pairs(a, b, 0.5, 100.0);
      std::uint64_t total = 0;
      for (const auto& [k, n] : ref) {
        const auto i = static_cast<std::size_t>(k + static_cast<long long>(h.size() / 2));
        CHECK(h.count(i) == n);
        total += n;
      }
      CHECK(h.total() == total);
      const DelayWindow w{-3.7, 12.2};
      CHECK(count_coincidences(a, b, w) == oracle::all_pairs_in(a, b, w.lo_ns, w.hi_ns));
    }
    const std::vector<double> unsorted{2.0, 1.0};
    CHECK_THROWS_AS(build_histogram(unsorted, unsorted, 1.0, 1.0), std::invalid_argument);
  }

  TEST_CASE("histogram merge and binning") {
    CoincidenceHistogram h(0.5, 2.0);
    CHECK(h.size() == 9);
    h.add(0.24);
    h.add(-0.26);
    h.add(2.5);
    CHECK(h.count(4) == 1);
    CHECK(h.count(3) == 1);
    CHECK(h.total() == 2);
    CoincidenceHistogram g(0.5, 2.0);
    g.add(0.0);
    h.merge(g);
    CHECK(h.count(4) == 2);
    CHECK_THROWS_AS(h.merge(CoincidenceHistogram(0.25, 2.0)), std::invalid_argument);
    CHECK_THROWS_AS(h.add_to_bin(9, 1), std::out_of_range);
  }

  TEST_CASE("post-selection window") {
    const std::vector<double> a{0.0, 100.0, 200.0}, b{0.1, 176.0, 200.05};
    const WindowSelection s = post_select_events(a, b, {-0.2, 0.2}, 76.0);
    CHECK(s.counts == 2);
    CHECK_FALSE(s.overlaps_side_peaks);
    const WindowSelection wide = post_select_events(a, b, {-100.0, 100.0}, 76.0);
    CHECK(wide.overlaps_side_peaks);
    CHECK(wide.counts == 5);
    const WindowSelection empty = post_select_events(a, b, {0.3, 0.3}, 76.0);
    CHECK(empty.counts == 0);
    CHECK(empty.insufficient_statistics);
  }

  TEST_CASE("accidental rate") {
    CHECK(accidental_rate(1000.0, 1000.0, 31.2) == doctest::Approx(3.12e-2));
    CHECK(accidental_rate(0.0, 1000.0, 31.2) == 0.0);
    CHECK_THROWS_AS(accidental_rate(-1.0, 1.0, 1.0), std::invalid_argument);
  }

  TEST_CASE("branch sampling") {
    const TemporalBranchState diag = apply_transcriber(ProductInput::diagonal(), {});
    Rng rng(12);
    std::array<int, 4> n{};
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) ++n[static_cast<std::size_t>(sample_branch_and_times({0.0, 0.0}, diag, Lineshape::lorentzian, 1.0, rng).branch)];
    const double sigma = std::sqrt(draws * 0.25 * 0.75);
    for (int c : n) CHECK(std::abs(c - 0.25 * draws) < 3.0 * sigma);

    ProductInput h;
    h.alpha1 = h.alpha2 = 1.0;
    h.beta1 = h.beta2 = 0.0;
    const TemporalBranchState pure = apply_transcriber(h, {});
    for (int k = 0; k < 1000; ++k) {
      const SampledPair p = sample_branch_and_times({10.0, 0.0}, pure, Lineshape::gaussian, 0.01, rng);
      CHECK(p.branch == kBranchHH);
      CHECK(p.t1_ns == 10.0);
    }
  }

  TEST_CASE("file formats") {
    std::ostringstream ts;
    const std::vector<TimestampRecord> r{{Channel::alice, 1.25, Origin::photon}, {Channel::bob, 3.0, Origin::dark}};
    write_timestamps(ts, r);
    CHECK(ts.str() == "channel,time_ns,origin\nalice,1.25,photon\nbob,3,dark\n");
    CoincidenceHistogram h(1.0, 1.0);
    h.add(0.0);
    std::ostringstream hs;
    write_histogram(hs, h, 2.5, "abc");
    CHECK(hs.str() == "# bin_width_ns=1\n# duration_s=2.5\n# config_hash=abc\ndelay_ns,count\n-1,0\n0,1\n1,0\n");
  }
}
