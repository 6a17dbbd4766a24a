#include <doctest.h>

#include <polent/orchestrator.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <vector>

using namespace polent;
using std::numbers::pi;

TEST_SUITE("orchestrator") {
  TEST_CASE("config json round trip is byte identical") {
    for (const auto& name : preset_names()) {
      const ScenarioConfig c = preset(name);
      const std::string text = c.to_json();
      CHECK(ScenarioConfig::from_json(text).to_json() == text);
    }
  }

  TEST_CASE("unknown keys and malformed json are rejected") {
    nlohmann::json j = nlohmann::json::parse(preset("fig2").to_json());
    j["bogus"] = 1;
    CHECK_THROWS_AS(ScenarioConfig::from_json(j.dump()), ConfigError);
    j.erase("bogus");
    j["pump"]["colour"] = "blue";
    try {
      (void)ScenarioConfig::from_json(j.dump());
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      REQUIRE(e.issues().size() == 1);
      CHECK(e.issues()[0].find("pump.colour") != std::string::npos);
    }
    CHECK_THROWS_AS(ScenarioConfig::from_json("{"), ConfigError);
    CHECK_THROWS_AS(ScenarioConfig::from_json("[]"), ConfigError);
  }

  TEST_CASE("hash ignores the seed only") {
    ScenarioConfig a = preset("fig5_540MHz");
    ScenarioConfig b = a;
    b.seed = 999;
    CHECK(a.hash() == b.hash());
    b.duration_s = 2.0;
    CHECK(a.hash() != b.hash());
    CHECK(a.hash_hex().size() == 16);
  }

  TEST_CASE("shipped preset files match the built-in presets") {
    const std::filesystem::path dir = POLENT_PRESET_DIR;
    for (const auto& name : preset_names()) {
      const auto file = dir / (name + ".json");
      REQUIRE_MESSAGE(std::filesystem::exists(file), file.string());
      CHECK(load_config(file).to_json() == preset(name).to_json());
    }
    CHECK_THROWS_AS(preset("nope"), std::invalid_argument);
  }

  TEST_CASE("validation collects problems from every module") {
    ScenarioConfig c = preset("fig2");
    c.pump.power_mw = -1.0;
    c.detector_a.efficiency = 2.0;
    c.transcriber.delta_t_ns = 0.0;
    const auto issues = c.validation_errors();
    CHECK(issues.size() >= 3);
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(preset("fig2").validation_errors().empty());
  }

  TEST_CASE("parameter paths") {
    const ScenarioConfig c = preset("fig2");
    const auto paths = parameter_paths(c);
    CHECK(std::find(paths.begin(), paths.end(), "transcriber.phi2") != paths.end());
    CHECK(get_parameter(with_parameter(c, "transcriber.phi2", 1.25), "transcriber.phi2") == 1.25);
    CHECK_THROWS_AS(with_parameter(c, "transcriber.nope", 1.0), std::invalid_argument);
    CHECK_THROWS_AS(with_parameter(c, "name", 1.0), std::invalid_argument);
  }

  TEST_CASE("monte carlo records are reproducible") {
    ScenarioConfig c = preset("fig5_540MHz");
    c.duration_s = 0.02;
    const RunRecord a = run_scenario(c);
    const RunRecord b = run_scenario(c);
    CHECK(a.digest() == b.digest());
    CHECK(a.to_json(false) == b.to_json(false));
    c.seed = 2;
    CHECK(run_scenario(c).digest() != a.digest());

    ScenarioConfig t = preset("fig3_540MHz");
    const McResult s1 = simulate_timestamps(t, 0.01);
    const McResult s2 = simulate_timestamps(t, 0.01);
    CHECK(s1.stream_a == s2.stream_a);
    CHECK(s1.stream_b == s2.stream_b);
  }

  TEST_CASE("ideal analytic bell run reaches the quantum bound") {
    const RunRecord r = run_scenario(preset("ideal"));
    REQUIRE(r.bell);
    CHECK(std::abs(r.bell->chsh.s - 2.0 * std::numbers::sqrt2) < 1e-9);
    CHECK(r.bell->fidelity == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.ok());
  }

  TEST_CASE("phase sweep peaks at zero and dips at pi") {
    std::vector<double> phis;
    for (int i = 0; i < 16; ++i) phis.push_back(2.0 * pi * i / 16.0);
    const auto runs = sweep(preset("fig5_sweep"), "transcriber.phi2", phis);
    REQUIRE(runs.size() == 16);
    std::size_t imax = 0, imin = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const double n = runs[i].coincidence->counts[0].counts;
      if (n > runs[imax].coincidence->counts[0].counts) imax = i;
      if (n < runs[imin].coincidence->counts[0].counts) imin = i;
    }
    CHECK(imax == 0);
    CHECK(imin == 8);
    CHECK(sweep(preset("fig5_sweep"), "transcriber.phi2", std::vector<double>{}).empty());
    CHECK_THROWS_AS(sweep(preset("fig5_sweep"), "nope", phis), std::invalid_argument);
  }

  TEST_CASE("temperature sweep closes the splitting at degeneracy") {
    const std::vector<double> temps{380.0, 383.0, 385.0, 386.0, 387.0};
    const auto runs = sweep(preset("fig2"), "crystal_temperature_k", temps);
    REQUIRE(runs.size() == temps.size());
    for (std::size_t i = 1; i < runs.size(); ++i)
      CHECK(std::abs(runs[i].tuning.splitting_nm()) < std::abs(runs[i - 1].tuning.splitting_nm()));
    CHECK(std::abs(runs.back().tuning.splitting_nm()) < 1e-9);
  }

  TEST_CASE("fringes in four bases") {
    ScenarioConfig c = preset("fig4");
    c.engine = EngineKind::analytic;
    const RunRecord r = run_scenario(c);
    REQUIRE(r.bell);
    REQUIRE(r.bell->fringes.size() == 4);
    for (const auto& f : r.bell->fringes) {
      CHECK(f.raw_fit.visibility > 0.9);
      CHECK(f.raw_fit.visibility <= 1.0);
      CHECK(f.net.fit.visibility >= f.raw_fit.visibility);
    }
  }

  TEST_CASE("engines agree on a short bell run") {
    ScenarioConfig c = preset("table1_540MHz");
    c.duration_s = 2.0;
    const RunRecord an = run_scenario(c);
    c.engine = EngineKind::monte_carlo;
    const RunRecord mc = run_scenario(c);
    REQUIRE(an.bell);
    REQUIRE(mc.bell);
    CHECK(std::abs(mc.bell->chsh.s - an.bell->chsh.s) < 3.0 * mc.bell->chsh.error);
    CHECK(std::abs(mc.bell->v_raw - an.bell->v_raw) < 3.0 * mc.bell->v_raw_error);
  }
}
