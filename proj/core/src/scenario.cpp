#include "polent/scenario.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>

#include "polent/rng.hpp"
#include "polent/transcriber.hpp"

namespace polent {

using nlohmann::json;

std::string_view to_string(MeasurementKind k) {
  switch (k) {
    case MeasurementKind::histogram: return "histogram";
    case MeasurementKind::bell: return "bell";
    case MeasurementKind::phase_scan: return "phase_scan";
    case MeasurementKind::coincidence: return "coincidence";
    case MeasurementKind::servo: return "servo";
  }
  return "bell";
}

MeasurementKind measurement_from_string(std::string_view name) {
  for (auto k : {MeasurementKind::histogram, MeasurementKind::bell, MeasurementKind::phase_scan,
                 MeasurementKind::coincidence, MeasurementKind::servo})
    if (to_string(k) == name) return k;
  throw std::invalid_argument(
      fmt::format("unknown measurement kind '{}' (expected histogram, bell, phase_scan, coincidence, servo)", name));
}

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string out = "invalid configuration:";
  for (const auto& i : issues) out += "\n  " + i;
  return out;
}

json complex_json(Complex c) { return json::array({c.real(), c.imag()}); }

Complex complex_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("complex values must be [re, im]");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json detector_json(const DetectorSpec& d) {
  return {{"efficiency", d.efficiency},
          {"dark_count_prob_per_ns", d.dark_count_prob_per_ns},
          {"jitter_sigma_ns", d.jitter_sigma_ns},
          {"dead_time_ns", d.dead_time_ns}};
}

DetectorSpec detector_from(const json& j) {
  DetectorSpec d;
  d.efficiency = j.at("efficiency").get<double>();
  d.dark_count_prob_per_ns = j.at("dark_count_prob_per_ns").get<double>();
  d.jitter_sigma_ns = j.at("jitter_sigma_ns").get<double>();
  d.dead_time_ns = j.at("dead_time_ns").get<double>();
  return d;
}

json to_j(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["kind"] = std::string(to_string(c.kind));
  j["engine"] = std::string(to_string(c.engine));
  j["duration_s"] = c.duration_s;
  j["seed"] = c.seed;
  j["force"] = c.force;
  j["crystal_temperature_k"] = c.crystal_temperature_k;
  j["pump"] = {{"power_mw", c.pump.power_mw},
               {"pair_coherence_time_ns", c.pump.pair_coherence_time_ns},
               {"wavelength_nm", c.pump.wavelength_nm}};
  j["filter"] = {{"bandwidth_fwhm_mhz", c.filter.bandwidth_fwhm_mhz},
                 {"lineshape", std::string(to_string(c.filter.lineshape))},
                 {"peak_transmission", c.filter.peak_transmission},
                 {"center_wavelength_nm", c.filter.center_wavelength_nm}};
  j["phase_matching"] = {{"degeneracy_temperature_k", c.phase_matching.degeneracy_temperature_k},
                         {"degenerate_wavelength_nm", c.phase_matching.degenerate_wavelength_nm},
                         {"splitting_coefficient", c.phase_matching.splitting_coefficient},
                         {"native_bandwidth_thz", c.phase_matching.native_bandwidth_thz}};
  j["transcriber"] = {{"delta_t_ns", c.transcriber.delta_t_ns},
                      {"phi1", c.transcriber.phi1},
                      {"phi2", c.transcriber.phi2},
                      {"arm_transmission_H", c.transcriber.arm_transmission_H},
                      {"arm_transmission_V", c.transcriber.arm_transmission_V}};
  j["input"] = {{"alpha1", complex_json(c.input.alpha1)},
                {"beta1", complex_json(c.input.beta1)},
                {"alpha2", complex_json(c.input.alpha2)},
                {"beta2", complex_json(c.input.beta2)}};
  j["detectors"] = {{"alice", detector_json(c.detector_a)}, {"bob", detector_json(c.detector_b)}};
  j["channel"] = {{"transmission", c.channel_transmission},
                  {"routing", std::string(to_string(c.routing))},
                  {"window_width_ns", c.window_width_ns},
                  {"excess_dephasing_rad", c.excess_dephasing_rad}};
  j["servo"] = {{"loop_rate_khz", c.servo.loop_rate_khz},
                {"actuator_range_rad", c.servo.actuator_range_rad},
                {"actuator_slew_rad_per_s", c.servo.actuator_slew_rad_per_s},
                {"measurement_noise_sigma", c.servo.measurement_noise_sigma},
                {"kp", c.servo.kp},
                {"ki", c.servo.ki},
                {"enabled", c.servo.enabled},
                {"feed", c.servo_feed},
                {"feed_duration_s", c.servo_feed_duration_s}};
  j["drift"] = {{"phase_per_kelvin", c.drift.phase_per_kelvin},
                {"temperature_noise_sigma", c.drift.temperature_noise_sigma},
                {"deterministic_ramp", c.drift.deterministic_ramp}};
  json an = json::array();
  for (const auto& a : c.analyzers) an.push_back(json::array({a.alice_rad, a.bob_rad}));
  j["analyzers"] = an;
  j["histogram"] = {{"bin_width_ns", c.histogram.bin_width_ns}, {"max_delay_ns", c.histogram.max_delay_ns}};
  j["bell"] = {{"alice_bases", c.bell.alice_bases},
               {"bob_points", c.bell.bob_points},
               {"chsh",
                {{"a", c.bell.chsh.a}, {"a_prime", c.bell.chsh.a_prime}, {"b", c.bell.chsh.b},
                 {"b_prime", c.bell.chsh.b_prime}}}};
  j["phase_scan"] = {
      {"points", c.phase_scan.points}, {"alice_rad", c.phase_scan.alice_rad}, {"bob_rad", c.phase_scan.bob_rad}};
  j["servo_test"] = {{"closed_duration_s", c.servo_test.closed_duration_s},
                     {"open_duration_s", c.servo_test.open_duration_s},
                     {"open_seeds", c.servo_test.open_seeds},
                     {"step_rad", c.servo_test.step_rad}};
  j["targets"] = {{"mean_pairs_per_coherence_window", c.targets.mean_pairs_per_coherence_window}};
  return j;
}

ScenarioConfig from_j(const json& j) {
  ScenarioConfig c;
  c.name = j.at("name").get<std::string>();
  c.kind = measurement_from_string(j.at("kind").get<std::string>());
  c.engine = engine_from_string(j.at("engine").get<std::string>());
  c.duration_s = j.at("duration_s").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.force = j.at("force").get<bool>();
  c.crystal_temperature_k = j.at("crystal_temperature_k").get<double>();
  const json& p = j.at("pump");
  c.pump.power_mw = p.at("power_mw").get<double>();
  c.pump.pair_coherence_time_ns = p.at("pair_coherence_time_ns").get<double>();
  c.pump.wavelength_nm = p.at("wavelength_nm").get<double>();
  const json& f = j.at("filter");
  c.filter.bandwidth_fwhm_mhz = f.at("bandwidth_fwhm_mhz").get<double>();
  c.filter.lineshape = lineshape_from_string(f.at("lineshape").get<std::string>());
  c.filter.peak_transmission = f.at("peak_transmission").get<double>();
  c.filter.center_wavelength_nm = f.at("center_wavelength_nm").get<double>();
  const json& pm = j.at("phase_matching");
  c.phase_matching.degeneracy_temperature_k = pm.at("degeneracy_temperature_k").get<double>();
  c.phase_matching.degenerate_wavelength_nm = pm.at("degenerate_wavelength_nm").get<double>();
  c.phase_matching.splitting_coefficient = pm.at("splitting_coefficient").get<double>();
  c.phase_matching.native_bandwidth_thz = pm.at("native_bandwidth_thz").get<double>();
  const json& t = j.at("transcriber");
  c.transcriber.delta_t_ns = t.at("delta_t_ns").get<double>();
  c.transcriber.phi1 = t.at("phi1").get<double>();
  c.transcriber.phi2 = t.at("phi2").get<double>();
  c.transcriber.arm_transmission_H = t.at("arm_transmission_H").get<double>();
  c.transcriber.arm_transmission_V = t.at("arm_transmission_V").get<double>();
  const json& in = j.at("input");
  c.input.alpha1 = complex_from(in.at("alpha1"));
  c.input.beta1 = complex_from(in.at("beta1"));
  c.input.alpha2 = complex_from(in.at("alpha2"));
  c.input.beta2 = complex_from(in.at("beta2"));
  c.detector_a = detector_from(j.at("detectors").at("alice"));
  c.detector_b = detector_from(j.at("detectors").at("bob"));
  const json& ch = j.at("channel");
  c.channel_transmission = ch.at("transmission").get<double>();
  c.routing = routing_from_string(ch.at("routing").get<std::string>());
  c.window_width_ns = ch.at("window_width_ns").get<double>();
  c.excess_dephasing_rad = ch.at("excess_dephasing_rad").get<double>();
  const json& s = j.at("servo");
  c.servo.loop_rate_khz = s.at("loop_rate_khz").get<double>();
  c.servo.actuator_range_rad = s.at("actuator_range_rad").get<double>();
  c.servo.actuator_slew_rad_per_s = s.at("actuator_slew_rad_per_s").get<double>();
  c.servo.measurement_noise_sigma = s.at("measurement_noise_sigma").get<double>();
  c.servo.kp = s.at("kp").get<double>();
  c.servo.ki = s.at("ki").get<double>();
  c.servo.enabled = s.at("enabled").get<bool>();
  c.servo_feed = s.at("feed").get<bool>();
  c.servo_feed_duration_s = s.at("feed_duration_s").get<double>();
  const json& d = j.at("drift");
  c.drift.phase_per_kelvin = d.at("phase_per_kelvin").get<double>();
  c.drift.temperature_noise_sigma = d.at("temperature_noise_sigma").get<double>();
  c.drift.deterministic_ramp = d.at("deterministic_ramp").get<double>();
  for (const json& a : j.at("analyzers")) {
    if (!a.is_array() || a.size() != 2) throw std::invalid_argument("analyzers entries must be [alice_rad, bob_rad]");
    c.analyzers.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
  }
  c.histogram.bin_width_ns = j.at("histogram").at("bin_width_ns").get<double>();
  c.histogram.max_delay_ns = j.at("histogram").at("max_delay_ns").get<double>();
  const json& b = j.at("bell");
  c.bell.alice_bases = b.at("alice_bases").get<std::vector<double>>();
  c.bell.bob_points = b.at("bob_points").get<std::size_t>();
  c.bell.chsh.a = b.at("chsh").at("a").get<double>();
  c.bell.chsh.a_prime = b.at("chsh").at("a_prime").get<double>();
  c.bell.chsh.b = b.at("chsh").at("b").get<double>();
  c.bell.chsh.b_prime = b.at("chsh").at("b_prime").get<double>();
  const json& ps = j.at("phase_scan");
  c.phase_scan.points = ps.at("points").get<std::size_t>();
  c.phase_scan.alice_rad = ps.at("alice_rad").get<double>();
  c.phase_scan.bob_rad = ps.at("bob_rad").get<double>();
  const json& st = j.at("servo_test");
  c.servo_test.closed_duration_s = st.at("closed_duration_s").get<double>();
  c.servo_test.open_duration_s = st.at("open_duration_s").get<double>();
  c.servo_test.open_seeds = st.at("open_seeds").get<std::size_t>();
  c.servo_test.step_rad = st.at("step_rad").get<double>();
  c.targets.mean_pairs_per_coherence_window = j.at("targets").at("mean_pairs_per_coherence_window").get<double>();
  return c;
}

void collect_unknown(const json& input, const json& schema, const std::string& prefix, std::vector<std::string>& out) {
  for (auto it = input.begin(); it != input.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!schema.contains(it.key())) {
      out.push_back(path);
    } else if (it.value().is_object() && schema.at(it.key()).is_object()) {
      collect_unknown(it.value(), schema.at(it.key()), path, out);
    }
  }
}

void collect_paths(const json& j, const std::string& prefix, std::vector<std::string>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it.value().is_object()) {
      collect_paths(it.value(), path, out);
    } else if (it.value().is_number() && it.key() != "seed") {
      out.push_back(path);
    }
  }
}

json* resolve(json& root, std::string_view path) {
  json* node = &root;
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t dot = path.find('.', start);
    const std::string key(path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &(*node)[key];
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return node->is_number() ? node : nullptr;
}

template <typename F>
void check(std::vector<std::string>& issues, std::string_view module, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    issues.push_back(fmt::format("[{}] {}", module, e.what()));
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::invalid_argument(join_issues(issues)), issues_(std::move(issues)) {}

std::vector<std::string> ScenarioConfig::validation_errors() const {
  std::vector<std::string> issues;
  check(issues, "source", [&] { pump.validate(); });
  check(issues, "source", [&] { filter.validate(); });
  check(issues, "source", [&] { phase_matching.validate(); });
  check(issues, "transcriber", [&] { transcriber.validate(); });
  check(issues, "transcriber", [&] { input.validate(); });
  check(issues, "detection", [&] { detector_a.validate(); });
  check(issues, "detection", [&] { detector_b.validate(); });
  check(issues, "servo", [&] { servo.validate(); });
  check(issues, "servo", [&] { drift.validate(); });
  check(issues, "orchestrator", [&] {
    if (!(duration_s > 0.0)) throw std::invalid_argument("duration_s must be > 0");
    if (!(channel_transmission > 0.0 && channel_transmission <= 1.0))
      throw std::invalid_argument("channel transmission must lie in (0, 1]");
    if (!(window_width_ns >= 0.0)) throw std::invalid_argument("window width must be >= 0");
    if (!(excess_dephasing_rad >= 0.0)) throw std::invalid_argument("excess dephasing must be >= 0");
    if (!(crystal_temperature_k > 0.0)) throw std::invalid_argument("crystal temperature must be > 0");
    if (servo_feed && !(servo_feed_duration_s > 0.0)) throw std::invalid_argument("servo feed duration must be > 0");
  });
  check(issues, "detection", [&] {
    if (!(histogram.bin_width_ns > 0.0) || !(histogram.max_delay_ns > histogram.bin_width_ns))
      throw std::invalid_argument("histogram needs bin_width_ns > 0 and max_delay_ns > bin_width_ns");
  });
  check(issues, "analysis", [&] {
    if (kind == MeasurementKind::bell) {
      if (bell.bob_points < 8) throw std::invalid_argument("bell scan needs at least 8 Bob angles");
      if (bell.alice_bases.empty()) throw std::invalid_argument("bell scan needs at least one Alice basis");
    }
    if (kind == MeasurementKind::phase_scan && phase_scan.points < 8)
      throw std::invalid_argument("phase scan needs at least 8 points");
  });
  check(issues, "servo", [&] {
    if (kind == MeasurementKind::servo &&
        (!(servo_test.closed_duration_s > 0.0) || !(servo_test.open_duration_s > 0.0) || servo_test.open_seeds == 0))
      throw std::invalid_argument("servo test needs positive durations and at least one open-loop seed");
  });
  if (issues.empty() && !force) {
    const TimescaleReport r =
        validate_timescales(transcriber, coherence_time_ns(filter), pump.pair_coherence_time_ns);
    if (!r.ok()) issues.push_back(fmt::format("[transcriber] {} (set force to override)", r.describe()));
  }
  return issues;
}

void ScenarioConfig::validate() const {
  auto issues = validation_errors();
  if (!issues.empty()) throw ConfigError(std::move(issues));
}

SetupModel ScenarioConfig::setup(double servo_sigma_rad) const {
  SetupModel s;
  s.pump = pump;
  s.filter = filter;
  s.transcriber = transcriber;
  s.input = input;
  s.detector_a = detector_a;
  s.detector_b = detector_b;
  s.channel_transmission = channel_transmission;
  s.routing = routing;
  s.servo_sigma_rad = servo_sigma_rad;
  s.excess_dephasing_rad = excess_dephasing_rad;
  s.window_width_ns = window_width_ns;
  s.native_bandwidth_thz = phase_matching.native_bandwidth_thz;
  return s;
}

std::string ScenarioConfig::to_json() const { return to_j(*this).dump(2) + "\n"; }

ScenarioConfig ScenarioConfig::from_json(std::string_view text) {
  json input;
  try {
    input = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({fmt::format("[orchestrator] malformed JSON: {}", e.what())});
  }
  if (!input.is_object()) throw ConfigError({"[orchestrator] configuration must be a JSON object"});
  const json schema = to_j(ScenarioConfig{});
  std::vector<std::string> unknown;
  collect_unknown(input, schema, "", unknown);
  if (!unknown.empty()) {
    std::vector<std::string> issues;
    for (const auto& u : unknown) issues.push_back(fmt::format("[orchestrator] unknown key '{}'", u));
    throw ConfigError(std::move(issues));
  }
  json merged = schema;
  merged.merge_patch(input);
  try {
    return from_j(merged);
  } catch (const std::exception& e) {
    throw ConfigError({fmt::format("[orchestrator] {}", e.what())});
  }
}

std::uint64_t ScenarioConfig::hash() const {
  json j = to_j(*this);
  j.erase("seed");
  return fnv1a64(j.dump());
}

std::string ScenarioConfig::hash_hex() const { return fmt::format("{:016x}", hash()); }

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({fmt::format("[orchestrator] cannot open config '{}'", path.string())});
  std::stringstream ss;
  ss << in.rdbuf();
  return ScenarioConfig::from_json(ss.str());
}

void save_config(const std::filesystem::path& path, const ScenarioConfig& config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write config '{}'", path.string()));
  out << config.to_json();
}

namespace {

constexpr double kPi = std::numbers::pi;

ScenarioConfig table1_base(std::string name) {
  ScenarioConfig c;
  c.name = std::move(name);
  c.kind = MeasurementKind::bell;
  c.engine = EngineKind::analytic;
  c.transcriber.phi2 = kPi;
  return c;
}

ScenarioConfig with_100ghz(ScenarioConfig c) {
  c.pump.power_mw = 0.02;
  c.filter = {125000.0, Lineshape::gaussian, 0.8, 1560.0};
  c.channel_transmission = 0.23;
  c.histogram = {0.01, 100.0};
  return c;
}

ScenarioConfig with_540mhz(ScenarioConfig c) {
  c.pump.power_mw = 0.6;
  c.filter = {540.0, Lineshape::gaussian, 0.58, 1560.0};
  c.channel_transmission = 0.14;
  c.histogram = {0.02, 100.0};
  return c;
}

ScenarioConfig with_25mhz(ScenarioConfig c) {
  c.pump.power_mw = 7.0;
  c.filter = {25.0, Lineshape::lorentzian, 0.72, 1560.0};
  c.channel_transmission = 0.18;
  c.histogram = {0.25, 250.0};
  c.targets.mean_pairs_per_coherence_window = 2e-2;
  return c;
}

ScenarioConfig make_preset(std::string_view name) {
  if (name == "table1_100GHz") {
    auto c = with_100ghz(table1_base("table1_100GHz"));
    c.duration_s = 3.2;
    return c;
  }
  if (name == "table1_540MHz") {
    auto c = with_540mhz(table1_base("table1_540MHz"));
    c.duration_s = 74.0;
    return c;
  }
  if (name == "table1_25MHz" || name == "fig4") {
    auto c = with_25mhz(table1_base(std::string(name)));
    c.detector_a = c.detector_b = DetectorSpec::snspd();
    c.duration_s = 850.0;
    if (name == "fig4") {
      c.engine = EngineKind::monte_carlo;
      c.duration_s = 100.0;
    }
    return c;
  }
  if (name == "fig3_100GHz" || name == "fig3_540MHz" || name == "fig3_25MHz") {
    ScenarioConfig c;
    c.name = std::string(name);
    c.kind = MeasurementKind::histogram;
    c.engine = EngineKind::monte_carlo;
    c.transcriber.phi2 = kPi;
    c.servo_feed = false;
    if (name == "fig3_100GHz") {
      c = with_100ghz(c);
      c.duration_s = 40.0;
    } else if (name == "fig3_540MHz") {
      c = with_540mhz(c);
      c.channel_transmission = 1.0;
      c.duration_s = 30.0;
    } else {
      c = with_25mhz(c);
      c.channel_transmission = 1.0;
      c.duration_s = 1500.0;
    }
    return c;
  }
  if (name == "fig5_100GHz" || name == "fig5_540MHz" || name == "fig5_25MHz") {
    ScenarioConfig c;
    c.name = std::string(name);
    c.kind = MeasurementKind::phase_scan;
    c.engine = EngineKind::monte_carlo;
    if (name == "fig5_100GHz") {
      c = with_100ghz(c);
    } else if (name == "fig5_540MHz") {
      c = with_540mhz(c);
      c.channel_transmission = 1.0;
    } else {
      c = with_25mhz(c);
      c.channel_transmission = 1.0;
    }
    c.duration_s = name == "fig5_25MHz" ? 300.0 : 1.0;
    return c;
  }
  if (name == "fig5_sweep") {
    auto c = with_25mhz(ScenarioConfig{});
    c.name = "fig5_sweep";
    c.kind = MeasurementKind::coincidence;
    c.engine = EngineKind::analytic;
    c.analyzers = {{kPi / 8.0, kPi / 8.0}};
    return c;
  }
  if (name == "fig2") {
    ScenarioConfig c;
    c.name = "fig2";
    c.kind = MeasurementKind::coincidence;
    c.engine = EngineKind::analytic;
    return c;
  }
  if (name == "ideal") {
    ScenarioConfig c;
    c.name = "ideal";
    c.kind = MeasurementKind::bell;
    c.engine = EngineKind::analytic;
    c.pump = {1e-9, 1e15, 780.0};
    c.filter = {125000.0, Lineshape::gaussian, 1.0, 1560.0};
    c.transcriber.phi2 = kPi;
    c.detector_a = c.detector_b = DetectorSpec{1.0, 0.0, 0.0, 0.0};
    c.servo_feed = false;
    c.duration_s = 1e6;
    return c;
  }
  if (name == "servo") {
    ScenarioConfig c;
    c.name = "servo";
    c.kind = MeasurementKind::servo;
    return c;
  }
  std::string known;
  for (const auto& n : preset_names()) known += " " + n;
  throw std::invalid_argument(fmt::format("unknown preset '{}' (known:{})", name, known));
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"table1_100GHz", "table1_540MHz", "table1_25MHz", "fig2",   "fig3_100GHz", "fig3_540MHz", "fig3_25MHz",
          "fig4",          "fig5_100GHz",   "fig5_540MHz",  "fig5_25MHz", "fig5_sweep", "ideal",       "servo"};
}

ScenarioConfig preset(std::string_view name) { return make_preset(name); }

std::vector<std::string> parameter_paths(const ScenarioConfig& config) {
  std::vector<std::string> out;
  collect_paths(to_j(config), "", out);
  return out;
}

double get_parameter(const ScenarioConfig& config, std::string_view path) {
  json j = to_j(config);
  const json* node = resolve(j, path);
  if (!node) {
    std::string valid;
    for (const auto& p : parameter_paths(config)) valid += " " + p;
    throw std::invalid_argument(fmt::format("unknown parameter path '{}' (valid:{})", path, valid));
  }
  return node->get<double>();
}

ScenarioConfig with_parameter(const ScenarioConfig& config, std::string_view path, double value) {
  json j = to_j(config);
  json* node = path == "seed" ? nullptr : resolve(j, path);
  if (!node) {
    std::string valid;
    for (const auto& p : parameter_paths(config)) valid += " " + p;
    throw std::invalid_argument(fmt::format("unknown parameter path '{}' (valid:{})", path, valid));
  }
  if (node->is_number_unsigned() || node->is_number_integer()) {
    if (!(value >= 0.0) || value != std::floor(value))
      throw std::invalid_argument(fmt::format("parameter '{}' needs a non-negative integer", path));
    *node = static_cast<std::uint64_t>(value);
  } else {
    *node = value;
  }
  return from_j(j);
}

}  // namespace polent
