#include "polent/orchestrator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>

#include "polent/rng.hpp"
#include "polent/transcriber.hpp"

#ifndef POLENT_VERSION
#define POLENT_VERSION "0.0.0"
#endif

namespace polent {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

double reduce_angle(double a) {
  double r = std::fmod(a, kPi);
  if (r < 0.0) r += kPi;
  if (kPi - r < 1e-12) r = 0.0;
  return r;
}

// Measurements of one run keyed by the reduced analyzer angles so that repeated
// settings reuse the same counts.
class SettingCache {
 public:
  SettingCache(const CountEngine& engine, const SetupModel& setup, double duration_s, std::uint64_t seed)
      : engine_(engine), setup_(setup), duration_s_(duration_s), seed_(seed) {}

  const SettingCounts& at(double alice, double bob) {
    const auto key = std::make_pair(std::llround(reduce_angle(alice) * 1e9), std::llround(reduce_angle(bob) * 1e9));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const std::string label = fmt::format("setting.{}.{}", key.first, key.second);
    const SettingCounts c = engine_.measure(setup_, MeasurementSetting::with(AnalyzerSetting(alice), AnalyzerSetting(bob)),
                                            duration_s_, seed_, label);
    return cache_.emplace(key, c).first->second;
  }

 private:
  const CountEngine& engine_;
  const SetupModel& setup_;
  double duration_s_;
  std::uint64_t seed_;
  std::map<std::pair<long long, long long>, SettingCounts> cache_;
};

FringeResult finish_fringe(std::string label, FringeScan scan, std::vector<double> accidentals) {
  FringeResult r;
  r.label = std::move(label);
  r.raw = std::move(scan);
  r.accidentals = std::move(accidentals);
  r.raw_fit = fit_fringe(r.raw);
  r.net = net_correction(r.raw, r.accidentals);
  return r;
}

double correlation_of(const std::array<double, 4>& n) { return correlation_from_counts(n).value; }

BellResult run_bell(const ScenarioConfig& cfg, const SetupModel& setup, const CountEngine& engine,
                    std::uint64_t seed) {
  BellResult out;
  SettingCache cache(engine, setup, cfg.duration_s, seed);
  const std::size_t np = cfg.bell.bob_points;
  for (std::size_t ai = 0; ai < cfg.bell.alice_bases.size(); ++ai) {
    const double alice = cfg.bell.alice_bases[ai];
    FringeScan scan;
    scan.fixed = AnalyzerSetting(alice);
    scan.harmonic = 4.0;
    std::vector<double> acc;
    for (std::size_t k = 0; k < np; ++k) {
      const double bob = 0.5 * kPi * static_cast<double>(k) / static_cast<double>(np);
      const SettingCounts& c = cache.at(alice, bob);
      scan.points.push_back({bob, c.counts, c.duration_s});
      acc.push_back(c.accidentals);
    }
    out.fringes.push_back(finish_fringe(fmt::format("alice_{:.6f}", alice), std::move(scan), std::move(acc)));
  }

  // Diagonal bases sit at odd multiples of pi/8.
  std::vector<std::size_t> diag;
  for (std::size_t i = 0; i < cfg.bell.alice_bases.size(); ++i) {
    const double r = std::fmod(reduce_angle(cfg.bell.alice_bases[i]), kPi / 4.0);
    if (std::abs(r - kPi / 8.0) < 1e-9) diag.push_back(i);
  }
  if (diag.empty())
    for (std::size_t i = 0; i < out.fringes.size(); ++i) diag.push_back(i);
  double vr = 0, vre = 0, vn = 0, vne = 0;
  for (std::size_t i : diag) {
    vr += out.fringes[i].raw_fit.visibility;
    vre += std::pow(out.fringes[i].raw_fit.visibility_error, 2);
    vn += out.fringes[i].net.fit.visibility;
    vne += std::pow(out.fringes[i].net.fit.visibility_error, 2);
  }
  const double nd = static_cast<double>(diag.size());
  out.v_raw = vr / nd;
  out.v_raw_error = std::sqrt(vre) / nd;
  out.v_net = vn / nd;
  out.v_net_error = std::sqrt(vne) / nd;

  auto outcome = [&](double a, double b, bool net) {
    const AnalyzerSetting sa(a), sb(b);
    const double ao = sa.orthogonal().hwp_angle, bo = sb.orthogonal().hwp_angle;
    const std::array<const SettingCounts*, 4> c{&cache.at(a, b), &cache.at(a, bo), &cache.at(ao, b),
                                                &cache.at(ao, bo)};
    OutcomeCounts n{};
    for (std::size_t i = 0; i < 4; ++i) n[i] = net ? std::max(0.0, c[i]->counts - c[i]->accidentals) : c[i]->counts;
    return n;
  };
  out.e_zz = correlation_of(outcome(0.0, 0.0, false));
  out.e_xx = correlation_of(outcome(kPi / 8.0, kPi / 8.0, false));
  out.fidelity = fidelity_from_correlations(out.e_zz, out.e_xx);
  out.fidelity_net = fidelity_from_correlations(correlation_of(outcome(0.0, 0.0, true)),
                                                correlation_of(outcome(kPi / 8.0, kPi / 8.0, true)));
  const auto pairs = cfg.bell.chsh.pairs();
  for (std::size_t i = 0; i < 4; ++i)
    out.chsh_counts[i] = outcome(pairs[i][0].hwp_angle, pairs[i][1].hwp_angle, false);
  out.chsh = chsh(out.chsh_counts);
  out.nsigma = out.chsh.error > 0.0 ? violation_nsigma(out.chsh.s, out.chsh.error) : 0.0;
  return out;
}

PhaseScanResult run_phase_scan(const ScenarioConfig& cfg, const SetupModel& base, const CountEngine& engine,
                               std::uint64_t seed) {
  FringeScan scan;
  scan.fixed = AnalyzerSetting(cfg.phase_scan.alice_rad);
  scan.harmonic = 1.0;
  std::vector<double> acc;
  const MeasurementSetting m =
      MeasurementSetting::with(AnalyzerSetting(cfg.phase_scan.alice_rad), AnalyzerSetting(cfg.phase_scan.bob_rad));
  for (std::size_t i = 0; i < cfg.phase_scan.points; ++i) {
    const double phi = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(cfg.phase_scan.points);
    SetupModel s = base;
    s.transcriber.phi2 = phi;
    const SettingCounts c = engine.measure(s, m, cfg.duration_s, seed, fmt::format("phase.{}", i));
    scan.points.push_back({phi, c.counts, c.duration_s});
    acc.push_back(c.accidentals);
  }
  PhaseScanResult r;
  r.fringe = finish_fringe("phase_scan", std::move(scan), std::move(acc));
  r.max_phase_rad = std::fmod(-r.fringe.raw_fit.phase + 4.0 * kPi, 2.0 * kPi);
  return r;
}

HistogramResult run_histogram(const ScenarioConfig& cfg, const SetupModel& setup, std::uint64_t seed) {
  HistogramResult r;
  const MeasurementSetting m = cfg.analyzers.empty()
                                   ? MeasurementSetting::none()
                                   : MeasurementSetting::with(AnalyzerSetting(cfg.analyzers[0].alice_rad),
                                                              AnalyzerSetting(cfg.analyzers[0].bob_rad));
  if (cfg.engine == EngineKind::monte_carlo) {
    McOptions o;
    o.duration_s = cfg.duration_s;
    o.seed = seed;
    o.label = "histogram";
    o.histogram = true;
    o.bin_width_ns = cfg.histogram.bin_width_ns;
    o.max_delay_ns = cfg.histogram.max_delay_ns;
    McResult mc = run_monte_carlo(setup, m, o);
    r.histogram = std::move(*mc.histogram);
  } else {
    const auto expected =
        expected_histogram(setup, m, cfg.histogram.bin_width_ns, cfg.histogram.max_delay_ns, cfg.duration_s);
    r.histogram = CoincidenceHistogram(cfg.histogram.bin_width_ns, cfg.histogram.max_delay_ns);
    for (std::size_t i = 0; i < expected.size() && i < r.histogram.size(); ++i)
      r.histogram.add_to_bin(i, static_cast<std::uint64_t>(std::llround(expected[i])));
  }
  r.duration_s = cfg.duration_s;
  r.coincidences = r.histogram.total();
  const TemporalBranchState br = apply_transcriber(setup.input, setup.transcriber);
  const double side = 0.5 * br.side_norm();
  r.expected_ratio = side > 0.0 ? br.central_norm() / side : 0.0;
  try {
    r.peaks = peak_metrics(r.histogram, 3);
  } catch (const std::exception& e) {
    r.peak_error = e.what();
  }
  return r;
}

ServoResult run_servo(const ScenarioConfig& cfg, std::uint64_t seed) {
  ServoResult r;
  r.closed = simulate_closed_loop(cfg.drift, cfg.servo, 0.0, cfg.servo_test.closed_duration_s,
                                  derive_seed(seed, "servo.closed"));
  r.closed_rms = r.closed.residual_rms;
  ServoSpec open = cfg.servo;
  open.enabled = false;
  for (std::size_t i = 0; i < cfg.servo_test.open_seeds; ++i) {
    const ServoTrace t =
        simulate_closed_loop(cfg.drift, open, 0.0, cfg.servo_test.open_duration_s, derive_seed(seed, "servo.open", i));
    r.open_rms.push_back(t.residual_rms);
    r.open_final_rad.push_back(t.phase_rad.back() - t.target_rad);
  }
  double acc = 0.0;
  for (double e : r.open_final_rad) acc += e * e;
  r.open_final_rms = r.open_final_rad.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(r.open_final_rad.size()));
  try {
    r.settle_ms = step_response(cfg.servo, cfg.servo_test.step_rad, derive_seed(seed, "servo.step"));
    r.settled = true;
  } catch (const std::runtime_error&) {
    r.settled = false;
  }
  return r;
}

json fit_json(const FringeFit& f) {
  return {{"offset", f.offset},         {"amplitude", f.amplitude},
          {"phase", f.phase},           {"visibility", f.visibility},
          {"visibility_error", f.visibility_error}, {"chi2", f.chi2},
          {"dof", f.dof},               {"unphysical", f.unphysical}};
}

json fringe_json(const FringeResult& r) {
  json pts = json::array();
  for (std::size_t i = 0; i < r.raw.points.size(); ++i)
    pts.push_back({{"angle_rad", r.raw.points[i].angle_rad},
                   {"counts", r.raw.points[i].counts},
                   {"accidentals", r.accidentals[i]}});
  return {{"label", r.label},
          {"points", pts},
          {"raw", fit_json(r.raw_fit)},
          {"net", fit_json(r.net.fit)},
          {"clamped_points", r.net.clamped_points},
          {"overcorrection", r.net.overcorrection}};
}

void add(std::vector<Validation>& v, std::string name, bool ok, std::string detail) {
  v.push_back({std::move(name), ok, std::move(detail)});
}

}  // namespace

std::string_view code_version() { return POLENT_VERSION; }

bool RunRecord::ok() const {
  return std::all_of(validations.begin(), validations.end(), [](const Validation& v) { return v.passed; });
}

std::string RunRecord::to_json(bool include_wall_time) const {
  json j;
  j["config"] = json::parse(config.to_json());
  j["config_hash"] = config_hash;
  j["code_version"] = code_version;
  j["seed"] = seed;
  if (include_wall_time) j["wall_time_s"] = wall_time_s;
  j["servo_sigma_rad"] = servo_sigma_rad;
  j["tuning"] = {{"lambda_signal_nm", tuning.lambda_signal_nm},
                 {"lambda_idler_nm", tuning.lambda_idler_nm},
                 {"splitting_nm", tuning.splitting_nm()}};
  j["source"] = {{"pair_rate_per_s", pair_rate},
                 {"tau_c_ns", tau_c_ns},
                 {"mean_pairs_per_coherence_time", mean_pairs_per_coherence_time},
                 {"target_mean_pairs_per_coherence_window", config.targets.mean_pairs_per_coherence_window}};
  j["rates"] = {{"singles_a", rates.singles_a},
                {"singles_b", rates.singles_b},
                {"central_rate", rates.central_rate},
                {"side_rate", rates.side_rate},
                {"signal_in_window", rates.signal_in_window},
                {"joint_live", rates.joint_live},
                {"accidental_in_window", rates.accidental_in_window},
                {"floor_estimate_in_window", rates.floor_estimate_in_window}};
  if (histogram) {
    json h = {{"bin_width_ns", histogram->histogram.bin_width()},
              {"max_delay_ns", histogram->histogram.max_delay()},
              {"duration_s", histogram->duration_s},
              {"coincidences", histogram->coincidences},
              {"counts_digest", fmt::format("{:016x}", fnv1a64(std::string_view(
                                                           reinterpret_cast<const char*>(histogram->histogram.counts().data()),
                                                           histogram->histogram.counts().size() * sizeof(std::uint64_t))))},
              {"expected_ratio", histogram->expected_ratio}};
    if (histogram->peaks) {
      const PeakMetrics& p = *histogram->peaks;
      h["peaks"] = {{"positions_ns", p.positions},
                    {"fwhm_ns", p.fwhm},
                    {"areas", p.areas},
                    {"background_per_bin", p.background_per_bin},
                    {"central_to_side_ratio", p.central_to_side_ratio},
                    {"ratio_error", p.ratio_error}};
    } else {
      h["peak_error"] = histogram->peak_error;
    }
    j["histogram"] = h;
  }
  if (bell) {
    json fr = json::array();
    for (const auto& f : bell->fringes) fr.push_back(fringe_json(f));
    json e = json::array();
    for (const auto& c : bell->chsh.e) e.push_back({{"value", c.value}, {"error", c.error}});
    j["bell"] = {{"fringes", fr},
                 {"v_raw", bell->v_raw},
                 {"v_raw_error", bell->v_raw_error},
                 {"v_net", bell->v_net},
                 {"v_net_error", bell->v_net_error},
                 {"e_zz", bell->e_zz},
                 {"e_xx", bell->e_xx},
                 {"fidelity", bell->fidelity},
                 {"fidelity_net", bell->fidelity_net},
                 {"chsh", {{"s", bell->chsh.s}, {"s_signed", bell->chsh.s_signed}, {"error", bell->chsh.error},
                           {"correlations", e}, {"counts", bell->chsh_counts}}},
                 {"nsigma", bell->nsigma}};
  }
  if (phase_scan) {
    j["phase_scan"] = {{"fringe", fringe_json(phase_scan->fringe)}, {"max_phase_rad", phase_scan->max_phase_rad}};
  }
  if (coincidence) {
    json rows = json::array();
    for (std::size_t i = 0; i < coincidence->counts.size(); ++i) {
      const auto& c = coincidence->counts[i];
      json row = {{"counts", c.counts}, {"accidentals", c.accidentals}, {"singles_a", c.singles_a},
                  {"singles_b", c.singles_b}, {"duration_s", c.duration_s}};
      if (i < coincidence->settings.size()) {
        row["alice_rad"] = coincidence->settings[i].alice_rad;
        row["bob_rad"] = coincidence->settings[i].bob_rad;
      }
      rows.push_back(row);
    }
    j["coincidence"] = rows;
  }
  if (servo) {
    j["servo"] = {{"closed_rms_rad", servo->closed_rms},
                  {"saturated_samples", servo->closed.saturated_samples},
                  {"range_exceeded", servo->closed.range_exceeded},
                  {"open_rms_rad", servo->open_rms},
                  {"open_final_rad", servo->open_final_rad},
                  {"open_final_rms_rad", servo->open_final_rms},
                  {"settle_ms", servo->settle_ms},
                  {"settled", servo->settled}};
  }
  json v = json::array();
  for (const auto& x : validations) v.push_back({{"name", x.name}, {"passed", x.passed}, {"detail", x.detail}});
  j["validations"] = v;
  j["ok"] = ok();
  return j.dump(2) + "\n";
}

std::uint64_t RunRecord::digest() const { return fnv1a64(to_json(false)); }

RunRecord run_scenario(const ScenarioConfig& config, const std::filesystem::path& output_dir) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config = config;
  rec.config_hash = config.hash_hex();
  rec.code_version = std::string(code_version());
  rec.seed = config.seed;

  if (config.servo_feed) {
    const ServoTrace t = simulate_closed_loop(config.drift, config.servo, 0.0, config.servo_feed_duration_s,
                                              derive_seed(config.seed, "servo.feed"));
    rec.servo_sigma_rad = t.residual_rms;
  }
  const SetupModel setup = config.setup(rec.servo_sigma_rad);
  setup.validate();
  rec.tuning = tuning_curve(config.crystal_temperature_k, config.phase_matching);
  rec.pair_rate = setup.pair_rate();
  rec.tau_c_ns = setup.tau_c();
  rec.mean_pairs_per_coherence_time = rec.pair_rate * rec.tau_c_ns * 1e-9;
  rec.rates = analytic_rates(setup, MeasurementSetting::none());

  const auto engine = make_engine(config.engine);
  const std::uint64_t seed = derive_seed(config.seed, "run");
  auto& v = rec.validations;

  switch (config.kind) {
    case MeasurementKind::histogram: {
      rec.histogram = run_histogram(config, setup, seed);
      const HistogramResult& h = *rec.histogram;
      add(v, "peaks_found", h.peaks.has_value(), h.peaks ? "3 peaks" : h.peak_error);
      if (h.peaks) {
        const double dt = config.transcriber.delta_t_ns;
        const std::array<double, 3> want{-dt, 0.0, dt};
        bool pos_ok = true;
        std::string detail;
        for (std::size_t i = 0; i < 3; ++i) {
          const double tol = std::max(2.0 * config.histogram.bin_width_ns, 0.1 * h.peaks->fwhm[i]);
          pos_ok = pos_ok && std::abs(h.peaks->positions[i] - want[i]) <= tol;
          detail += fmt::format("{}{:.4f}", i ? " " : "", h.peaks->positions[i]);
        }
        add(v, "peak_positions", pos_ok, detail + " ns");
        const double err = h.peaks->ratio_error;
        const double dev = std::abs(h.peaks->central_to_side_ratio - h.expected_ratio);
        add(v, "area_ratio", config.engine == EngineKind::analytic ? dev < 0.01 * h.expected_ratio : dev <= 3.0 * err,
            fmt::format("{:.4f} +- {:.4f} (expected {:.4f})", h.peaks->central_to_side_ratio, err, h.expected_ratio));
      }
      break;
    }
    case MeasurementKind::bell: {
      rec.bell = run_bell(config, setup, *engine, seed);
      for (const auto& f : rec.bell->fringes) {
        add(v, "fringe_physical." + f.label, !f.raw_fit.unphysical && !f.net.fit.unphysical,
            fmt::format("V_raw {:.4f} +- {:.4f}, V_net {:.4f}", f.raw_fit.visibility, f.raw_fit.visibility_error,
                        f.net.fit.visibility));
        add(v, "no_overcorrection." + f.label, !f.net.overcorrection,
            fmt::format("{} clamped points", f.net.clamped_points));
      }
      add(v, "tsirelson_bound", rec.bell->chsh.s <= 2.0 * std::numbers::sqrt2 + 5.0 * rec.bell->chsh.error,
          fmt::format("S {:.4f} +- {:.4f}", rec.bell->chsh.s, rec.bell->chsh.error));
      break;
    }
    case MeasurementKind::phase_scan: {
      rec.phase_scan = run_phase_scan(config, setup, *engine, seed);
      const FringeResult& f = rec.phase_scan->fringe;
      add(v, "fringe_physical", !f.raw_fit.unphysical && !f.net.fit.unphysical,
          fmt::format("V_raw {:.4f} +- {:.4f}, V_net {:.4f} +- {:.4f}", f.raw_fit.visibility,
                      f.raw_fit.visibility_error, f.net.fit.visibility, f.net.fit.visibility_error));
      add(v, "no_overcorrection", !f.net.overcorrection, fmt::format("{} clamped points", f.net.clamped_points));
      break;
    }
    case MeasurementKind::coincidence: {
      CoincidenceResult c;
      c.settings = config.analyzers;
      if (config.analyzers.empty()) {
        c.counts.push_back(engine->measure(setup, MeasurementSetting::none(), config.duration_s, seed, "coincidence"));
      } else {
        for (std::size_t i = 0; i < config.analyzers.size(); ++i) {
          const auto& a = config.analyzers[i];
          c.counts.push_back(engine->measure(
              setup, MeasurementSetting::with(AnalyzerSetting(a.alice_rad), AnalyzerSetting(a.bob_rad)),
              config.duration_s, seed, fmt::format("coincidence.{}", i)));
        }
      }
      rec.coincidence = std::move(c);
      break;
    }
    case MeasurementKind::servo: {
      rec.servo = run_servo(config, seed);
      const ServoResult& s = *rec.servo;
      add(v, "closed_loop_rms", s.closed_rms < kPi / 100.0 && !s.closed.range_exceeded,
          fmt::format("{:.5f} rad (limit {:.5f})", s.closed_rms, kPi / 100.0));
      add(v, "open_loop_rms", s.open_final_rms > kPi,
          fmt::format("{:.3f} rad after {} s over {} seeds (limit {:.5f})", s.open_final_rms,
                      config.servo_test.open_duration_s, s.open_final_rad.size(), kPi));
      add(v, "step_settle", s.settled && s.settle_ms < 1.0,
          s.settled ? fmt::format("{:.4f} ms", s.settle_ms) : std::string("not settled within 1 s"));
      break;
    }
  }
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!output_dir.empty()) persist(rec, output_dir);
  return rec;
}

std::filesystem::path record_path(const std::filesystem::path& output_dir, const RunRecord& record) {
  return output_dir / fmt::format("{}-{}.json", record.config_hash, record.seed);
}

std::filesystem::path persist(const RunRecord& record, const std::filesystem::path& output_dir) {
  std::filesystem::create_directories(output_dir);
  const auto path = record_path(output_dir, record);
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write run record '{}'", path.string()));
  out << record.to_json();
  return path;
}

std::vector<RunRecord> sweep(const ScenarioConfig& base, std::string_view path, std::span<const double> values,
                             const std::filesystem::path& output_dir) {
  (void)get_parameter(base, path);
  std::vector<RunRecord> out;
  out.reserve(values.size());
  const std::string label = fmt::format("sweep.{}", path);
  for (std::size_t i = 0; i < values.size(); ++i) {
    ScenarioConfig c = with_parameter(base, path, values[i]);
    c.seed = derive_seed(base.seed, label, i);
    out.push_back(run_scenario(c, output_dir));
  }
  return out;
}

McResult simulate_timestamps(const ScenarioConfig& config, double duration_s) {
  config.validate();
  double sigma = 0.0;
  if (config.servo_feed)
    sigma = simulate_closed_loop(config.drift, config.servo, 0.0, config.servo_feed_duration_s,
                                 derive_seed(config.seed, "servo.feed"))
                .residual_rms;
  const SetupModel setup = config.setup(sigma);
  const MeasurementSetting m = config.analyzers.empty()
                                   ? MeasurementSetting::none()
                                   : MeasurementSetting::with(AnalyzerSetting(config.analyzers[0].alice_rad),
                                                              AnalyzerSetting(config.analyzers[0].bob_rad));
  McOptions o;
  o.duration_s = duration_s;
  o.seed = derive_seed(config.seed, "run");
  o.label = "timestamps";
  o.keep_streams = true;
  return run_monte_carlo(setup, m, o);
}

const std::array<Table1Reference, 3>& table1_reference() {
  static const std::array<Table1Reference, 3> ref{{{"table1_100GHz", 0.996, 0.0, 0.998, 2.82, 0.02},
                                                   {"table1_540MHz", 0.971, 0.0, 0.985, 2.80, 0.02},
                                                   {"table1_25MHz", 0.99, 0.03, 0.995, 2.82, 0.02}}};
  return ref;
}

bool Table1Result::passed() const {
  return complete && rows.size() == 3 &&
         std::all_of(rows.begin(), rows.end(), [](const Table1Row& r) { return r.passed(); });
}

std::string Table1Result::to_json() const {
  json rs = json::array();
  for (const auto& r : rows) {
    rs.push_back({{"preset", r.reference.preset},
                  {"config_hash", r.config_hash},
                  {"reference", {{"v_raw", r.reference.v_raw}, {"fidelity", r.reference.fidelity}, {"s", r.reference.s},
                             {"s_error", r.reference.s_error}}},
                  {"simulated", {{"v_raw", r.v_raw}, {"v_raw_error", r.v_raw_error}, {"v_net", r.v_net},
                                 {"fidelity", r.fidelity}, {"s", r.s}, {"s_error", r.s_error},
                                 {"nsigma", r.nsigma}}},
                  {"v_ok", r.v_ok},
                  {"s_ok", r.s_ok},
                  {"f_ok", r.f_ok},
                  {"passed", r.passed()}});
  }
  json j = {{"rows", rs},
            {"complete", complete},
            {"tolerances", {{"v_raw", kTable1VisibilityTolerance}, {"s", kTable1ChshTolerance},
                            {"fidelity_vs_visibility", kTable1FidelityTolerance}}},
            {"passed", passed()}};
  if (!error.empty()) j["error"] = error;
  return j.dump(2) + "\n";
}

std::string Table1Result::format() const {
  std::string out = fmt::format("{:<15} {:>14} {:>8} {:>8} {:>16} {:>8} {:>10} {}\n", "preset", "V_raw", "ref",
                                "F", "S", "ref", "F-(1+V)/2", "result");
  for (const auto& r : rows) {
    out += fmt::format("{:<15} {:>7.4f}+-{:<5.4f} {:>8.3f} {:>8.4f} {:>8.4f}+-{:<6.4f} {:>8.2f} {:>10.4f} {}{}{}\n",
                       r.reference.preset, r.v_raw, r.v_raw_error, r.reference.v_raw, r.fidelity, r.s, r.s_error,
                       r.reference.s, r.fidelity - 0.5 * (1.0 + r.v_raw), r.v_ok ? "V:pass " : "V:FAIL ",
                       r.s_ok ? "S:pass " : "S:FAIL ", r.f_ok ? "F:pass" : "F:FAIL");
  }
  if (!complete) out += fmt::format("incomplete: {}\n", error);
  return out;
}

Table1Result reproduce_table1(const Table1Options& options) {
  Table1Result result;
  for (const auto& ref : table1_reference()) {
    try {
      ScenarioConfig c = preset(ref.preset);
      if (options.engine) c.engine = *options.engine;
      if (options.seed) c.seed = *options.seed;
      c.duration_s *= options.duration_scale;
      const RunRecord rec = run_scenario(c, options.output_dir);
      const BellResult& b = *rec.bell;
      Table1Row row;
      row.reference = ref;
      row.config_hash = rec.config_hash;
      row.v_raw = b.v_raw;
      row.v_raw_error = b.v_raw_error;
      row.v_net = b.v_net;
      row.fidelity = b.fidelity;
      row.s = b.chsh.s;
      row.s_error = b.chsh.error;
      row.nsigma = b.nsigma;
      row.v_ok = std::abs(b.v_raw - ref.v_raw) <= kTable1VisibilityTolerance;
      row.s_ok = std::abs(b.chsh.s - ref.s) <= kTable1ChshTolerance;
      row.f_ok = std::abs(b.fidelity - 0.5 * (1.0 + b.v_raw)) < kTable1FidelityTolerance;
      result.rows.push_back(row);
    } catch (const std::exception& e) {
      result.complete = false;
      result.error = fmt::format("{}: {}", ref.preset, e.what());
      break;
    }
  }
  return result;
}

}  // namespace polent
