#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "polent/orchestrator.hpp"
#include "polent/rng.hpp"
#include "polent/source.hpp"

namespace fs = std::filesystem;
using namespace polent;

namespace {

struct Common {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string engine;
  std::string out = "runs";
  std::optional<double> duration;
  bool force = false;
};

void add_common(CLI::App* app, Common& c, const std::string& default_preset) {
  c.preset = default_preset;
  app->add_option("-c,--config", c.config, "Scenario JSON file");
  app->add_option("-p,--preset", c.preset, "Built-in preset name")->capture_default_str();
  app->add_option("-s,--seed", c.seed, "Master seed");
  app->add_option("-e,--engine", c.engine, "analytic or monte_carlo");
  app->add_option("-o,--out", c.out, "Output directory")->capture_default_str();
  app->add_option("-d,--duration", c.duration, "Integration time per setting in seconds");
  app->add_flag("--force", c.force, "Run even if the transcriber timescales overlap");
}

ScenarioConfig resolve(const Common& c) {
  ScenarioConfig cfg = c.config.empty() ? preset(c.preset) : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.engine.empty()) cfg.engine = engine_from_string(c.engine);
  if (c.duration) cfg.duration_s = *c.duration;
  if (c.force) cfg.force = true;
  return cfg;
}

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  return out;
}

fs::path artifact(const Common& c, const RunRecord& r, std::string_view suffix) {
  return fs::path(c.out) / fmt::format("{}-{}.{}", r.config_hash, r.seed, suffix);
}

void print_validations(const RunRecord& r) {
  for (const auto& v : r.validations)
    fmt::print("  [{}] {}: {}\n", v.passed ? "pass" : "FAIL", v.name, v.detail);
}

void print_summary(const RunRecord& r) {
  fmt::print("{} ({}) seed {} engine {} hash {}\n", r.config.name, to_string(r.config.kind), r.seed,
             to_string(r.config.engine), r.config_hash);
  fmt::print("  pair rate {:.4g}/s, tau_c {:.4g} ns, mean pairs per tau_c {:.3g}, servo sigma {:.4g} rad\n",
             r.pair_rate, r.tau_c_ns, r.mean_pairs_per_coherence_time, r.servo_sigma_rad);
  if (r.histogram) {
    fmt::print("  coincidences {}\n", r.histogram->coincidences);
    if (r.histogram->peaks) {
      const auto& p = *r.histogram->peaks;
      for (std::size_t i = 0; i < p.positions.size(); ++i)
        fmt::print("  peak {:+.4f} ns  fwhm {:.4f} ns  area {:.0f}\n", p.positions[i], p.fwhm[i], p.areas[i]);
      fmt::print("  central/side ratio {:.4f} +- {:.4f}\n", p.central_to_side_ratio, p.ratio_error);
    }
  }
  if (r.bell) {
    for (const auto& f : r.bell->fringes)
      fmt::print("  {}: V_raw {:.4f} +- {:.4f}  V_net {:.4f}\n", f.label, f.raw_fit.visibility,
                 f.raw_fit.visibility_error, f.net.fit.visibility);
    fmt::print("  V_raw {:.4f} +- {:.4f}  V_net {:.4f}  F {:.4f}  S {:.4f} +- {:.4f} ({:.1f} sigma)\n", r.bell->v_raw,
               r.bell->v_raw_error, r.bell->v_net, r.bell->fidelity, r.bell->chsh.s, r.bell->chsh.error,
               r.bell->nsigma);
  }
  if (r.phase_scan) {
    const auto& f = r.phase_scan->fringe;
    fmt::print("  V_raw {:.4f} +- {:.4f}  V_net {:.4f} +- {:.4f}  max at phi {:.4f} rad\n", f.raw_fit.visibility,
               f.raw_fit.visibility_error, f.net.fit.visibility, f.net.fit.visibility_error, r.phase_scan->max_phase_rad);
  }
  if (r.coincidence) {
    for (const auto& c : r.coincidence->counts)
      fmt::print("  coincidences {:.6g}  accidentals {:.6g}\n", c.counts, c.accidentals);
  }
  if (r.servo) {
    fmt::print("  closed-loop rms {:.5f} rad, open-loop final rms {:.3f} rad, settle {:.4f} ms\n", r.servo->closed_rms,
               r.servo->open_final_rms, r.servo->settle_ms);
  }
  print_validations(r);
}

int finish(const RunRecord& r, const Common& c) {
  const fs::path p = persist(r, c.out);
  fmt::print("  record {}\n", p.string());
  return r.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polarization-entanglement source simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(code_version()));

  Common run_c, sweep_c, hist_c, fringe_c, servo_c, tune_c, pairs_c;
  auto* run = app.add_subcommand("run", "Run one scenario and persist its record");
  add_common(run, run_c, "table1_25MHz");

  auto* sw = app.add_subcommand("sweep", "Run a scenario for each value of one parameter");
  add_common(sw, sweep_c, "fig5_sweep");
  std::string sweep_path = "transcriber.phi2";
  std::vector<double> sweep_values;
  double sweep_from = 0.0, sweep_to = 0.0;
  std::size_t sweep_steps = 0;
  sw->add_option("--param", sweep_path, "Dotted parameter path")->capture_default_str();
  sw->add_option("--values", sweep_values, "Explicit values");
  sw->add_option("--from", sweep_from, "Range start");
  sw->add_option("--to", sweep_to, "Range end (inclusive)");
  sw->add_option("--steps", sweep_steps, "Number of range points");

  auto* t1 = app.add_subcommand("table1", "Reproduce the entanglement summary table");
  std::optional<std::uint64_t> t1_seed;
  std::string t1_engine, t1_out = "runs";
  double t1_scale = 1.0;
  t1->add_option("-s,--seed", t1_seed, "Master seed");
  t1->add_option("-e,--engine", t1_engine, "analytic or monte_carlo");
  t1->add_option("-o,--out", t1_out, "Output directory")->capture_default_str();
  t1->add_option("--duration-scale", t1_scale, "Multiplier on preset integration times")->capture_default_str();

  auto* hist = app.add_subcommand("histogram", "Coincidence histogram of a scenario");
  add_common(hist, hist_c, "fig3_25MHz");
  double ts_seconds = 0.0;
  hist->add_option("--timestamps", ts_seconds, "Also write this many seconds of timestamp streams");

  auto* fr = app.add_subcommand("fringe", "Fringe scans of a bell or phase_scan scenario");
  add_common(fr, fringe_c, "fig5_25MHz");

  auto* sv = app.add_subcommand("servo", "Phase stabilization test and trace");
  add_common(sv, servo_c, "servo");
  std::size_t stride = 50;
  sv->add_option("--stride", stride, "Trace decimation")->capture_default_str();

  auto* tn = app.add_subcommand("tune", "Grid search of the servo gains");
  add_common(tn, tune_c, "servo");
  std::vector<double> kp_grid{0.05, 0.1, 0.2, 0.3, 0.5, 0.7}, ki_grid{0.05, 0.1, 0.2, 0.3, 0.5};
  double tune_duration = 0.5;
  tn->add_option("--kp", kp_grid, "Proportional gains")->capture_default_str();
  tn->add_option("--ki", ki_grid, "Integral gains")->capture_default_str();
  tn->add_option("--tune-duration", tune_duration, "Closed-loop duration per candidate")->capture_default_str();

  auto* pr = app.add_subcommand("presets", "List or export the built-in presets");
  std::string presets_dir;
  pr->add_option("--write", presets_dir, "Directory to write <name>.json files to");

  auto* pa = app.add_subcommand("pairs", "Emit raw pair records of the source");
  add_common(pa, pairs_c, "table1_25MHz");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const RunRecord r = run_scenario(resolve(run_c));
      print_summary(r);
      return finish(r, run_c);
    }
    if (sw->parsed()) {
      const ScenarioConfig base = resolve(sweep_c);
      std::vector<double> values = sweep_values;
      if (values.empty() && sweep_steps > 0) {
        for (std::size_t i = 0; i < sweep_steps; ++i)
          values.push_back(sweep_steps == 1 ? sweep_from
                                            : sweep_from + (sweep_to - sweep_from) * static_cast<double>(i) /
                                                               static_cast<double>(sweep_steps - 1));
      }
      const auto records = sweep(base, sweep_path, values, sweep_c.out);
      bool ok = true;
      fmt::print("{},config_hash,seed,ok,primary\n", sweep_path);
      for (std::size_t i = 0; i < records.size(); ++i) {
        const RunRecord& r = records[i];
        double primary = 0.0;
        if (r.coincidence && !r.coincidence->counts.empty()) primary = r.coincidence->counts[0].counts;
        if (r.bell) primary = r.bell->chsh.s;
        if (r.phase_scan) primary = r.phase_scan->fringe.raw_fit.visibility;
        if (r.histogram) primary = static_cast<double>(r.histogram->coincidences);
        if (r.config.kind == MeasurementKind::coincidence && r.config.analyzers.empty())
          primary = r.tuning.splitting_nm();
        fmt::print("{},{},{},{},{}\n", values[i], r.config_hash, r.seed, r.ok(), primary);
        ok = ok && r.ok();
      }
      return ok ? 0 : 1;
    }
    if (t1->parsed()) {
      Table1Options o;
      o.seed = t1_seed;
      if (!t1_engine.empty()) o.engine = engine_from_string(t1_engine);
      o.duration_scale = t1_scale;
      o.output_dir = t1_out;
      const Table1Result r = reproduce_table1(o);
      fmt::print("{}", r.format());
      auto out = open_out(fs::path(t1_out) / "table1.json");
      out << r.to_json();
      return r.passed() ? 0 : 1;
    }
    if (hist->parsed()) {
      ScenarioConfig cfg = resolve(hist_c);
      cfg.kind = MeasurementKind::histogram;
      const RunRecord r = run_scenario(cfg);
      print_summary(r);
      {
        auto out = open_out(artifact(hist_c, r, "histogram.csv"));
        write_histogram(out, r.histogram->histogram, r.histogram->duration_s, r.config_hash);
      }
      if (ts_seconds > 0.0) {
        const McResult mc = simulate_timestamps(cfg, ts_seconds);
        auto out = open_out(artifact(hist_c, r, "timestamps.csv"));
        std::vector<TimestampRecord> all = mc.stream_a;
        all.insert(all.end(), mc.stream_b.begin(), mc.stream_b.end());
        write_timestamps(out, all);
      }
      return finish(r, hist_c);
    }
    if (fr->parsed()) {
      ScenarioConfig cfg = resolve(fringe_c);
      if (cfg.kind != MeasurementKind::bell) cfg.kind = MeasurementKind::phase_scan;
      const RunRecord r = run_scenario(cfg);
      print_summary(r);
      if (r.phase_scan) {
        auto out = open_out(artifact(fringe_c, r, "fringe.csv"));
        write_fringe(out, r.phase_scan->fringe.raw);
      }
      if (r.bell) {
        for (const auto& f : r.bell->fringes) {
          auto out = open_out(artifact(fringe_c, r, f.label + ".fringe.csv"));
          write_fringe(out, f.raw);
        }
      }
      return finish(r, fringe_c);
    }
    if (sv->parsed()) {
      ScenarioConfig cfg = resolve(servo_c);
      cfg.kind = MeasurementKind::servo;
      const RunRecord r = run_scenario(cfg);
      print_summary(r);
      auto out = open_out(artifact(servo_c, r, "servo.csv"));
      write_servo_trace(out, r.servo->closed, stride);
      return finish(r, servo_c);
    }
    if (tn->parsed()) {
      const ScenarioConfig cfg = resolve(tune_c);
      const auto results = tune_gains(cfg.drift, cfg.servo, kp_grid, ki_grid, tune_duration, derive_seed(cfg.seed, "tune"));
      fmt::print("kp,ki,residual_rms_rad,settle_ms\n");
      for (const auto& t : results) fmt::print("{},{},{},{}\n", t.kp, t.ki, t.residual_rms, t.settle_ms);
      const bool ok = !results.empty() && results.front().settle_ms < 1.0 &&
                      results.front().residual_rms < 3.14159265358979324 / 100.0;
      if (ok) fmt::print("best kp {} ki {}\n", results.front().kp, results.front().ki);
      return ok ? 0 : 1;
    }
    if (pr->parsed()) {
      for (const auto& name : preset_names()) {
        if (presets_dir.empty()) {
          const ScenarioConfig c = preset(name);
          fmt::print("{:<15} {:<12} {:<12} {}\n", name, to_string(c.kind), to_string(c.engine), c.hash_hex());
        } else {
          fs::create_directories(presets_dir);
          save_config(fs::path(presets_dir) / (name + ".json"), preset(name));
        }
      }
      return 0;
    }
    if (pa->parsed()) {
      const ScenarioConfig cfg = resolve(pairs_c);
      cfg.validate();
      const double duration = pairs_c.duration.value_or(1e-3);
      const EmissionStream s = emission_process(cfg.pump, cfg.filter, duration, derive_seed(cfg.seed, "pairs"));
      auto out = open_out(fs::path(pairs_c.out) / fmt::format("{}-{}.pairs.csv", cfg.hash_hex(), cfg.seed));
      write_pair_records(out, s.pairs);
      fmt::print("{} pairs at {:.4g}/s, mean pairs per tau_c {:.3g}{}\n", s.pairs.size(), s.rate_per_s,
                 s.mean_pairs_per_coherence_time, s.multi_pair_warning ? " (multi-pair warning)" : "");
      return s.multi_pair_warning ? 1 : 0;
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "{}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
