// Command-line front end: simulation runs, the verification studies and a
// kernel self-check, each writing CSV tables plus manifest.json.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "snch/snch.hpp"

namespace {

enum Exit { kOk = 0, kOther = 1, kInvalid = 2, kNonFinite = 3, kBand = 4 };

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> paths;
  std::optional<int> workers;
  bool strict = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config_path, "INI configuration file");
  app->add_option("--seed", c.seed, "noise seed override");
  app->add_option("--out-dir", c.out_dir, "output directory override");
  app->add_option("--paths", c.paths, "number of Monte Carlo paths")->check(CLI::PositiveNumber);
  app->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  app->add_flag("--strict", c.strict, "exit 4 when a study leaves its pinned band");
}

snch::RunConfig load(const Common& c) {
  snch::RunConfig cfg = c.config_path.empty() ? snch::RunConfig{}
                                              : snch::parse_config(snch::read_file(c.config_path), false);
  if (c.seed) cfg.noise.seed = *c.seed;
  if (c.out_dir) cfg.run.out_dir = *c.out_dir;
  if (c.paths) cfg.run.paths = *c.paths;
  if (c.workers) cfg.run.workers = *c.workers;
  return cfg;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int band(bool ok, bool strict, const char* what) {
  if (ok) return kOk;
  std::fprintf(stderr, "warning: %s outside its pinned band\n", what);
  return strict ? kBand : kOk;
}

int cmd_simulate(const Common& c, bool print_config) {
  snch::RunConfig cfg = load(c);
  if (print_config) {
    std::cout << snch::to_ini(cfg);
    return kOk;
  }
  const auto checks = snch::check_assumptions(cfg);
  Timer timer;
  const auto setup = cfg.study_setup();
  auto kernel = cfg.solver.model == snch::Model::nonlocal ? setup.kernel(cfg.kernel.epsilon) : nullptr;
  snch::SolverConfig sc = cfg.solver;
  sc.keep_ledger = true;
  const snch::Problem problem = setup.problem(sc, kernel);
  for (const auto& w : problem.warnings()) std::fprintf(stderr, "warning: %s\n", w.c_str());
  const auto recs = problem.run_paths(setup.initial, cfg.run.paths, cfg.run.workers);

  snch::OutputDir out(cfg.run.out_dir);
  out.write("timeseries.csv", snch::timeseries_table(recs.front()));
  out.write("final_field.csv", snch::field_table(recs.front().final_field));
  out.write("ensemble.csv", snch::ensemble_table(snch::ensemble_stats(recs, cfg.experiment.p)));
  out.write_manifest("simulate", cfg, checks, timer.seconds());
  std::printf("simulate: %zu path(s), %zu steps, output in %s\n", recs.size(), recs.front().total_steps,
              cfg.run.out_dir.c_str());
  return kOk;
}

int cmd_rate(const Common& c) {
  const snch::RunConfig cfg = load(c);
  const auto checks = snch::check_assumptions(cfg);
  Timer timer;
  const auto r = snch::rate_study(cfg.study_setup(), cfg.experiment.epsilons);
  for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  snch::OutputDir out(cfg.run.out_dir);
  out.write("rate.csv", snch::rate_table(r));
  out.write("rate_summary.csv", snch::rate_summary_table(r));
  out.write_manifest("rate-study", cfg, checks, timer.seconds(),
                     {{"slope", r.slope}, {"monotone", r.monotone}, {"passed", r.passed}, {"in_band", r.in_band},
                      {"band", {snch::kRateSlopeMin, snch::kRateSlopeMax}}, {"warnings", r.warnings}});
  std::printf("rate-study: slope %.4g, monotone %d, passed %d, in band [%.2f, %.2f] %d\n", r.slope, r.monotone,
              r.passed, snch::kRateSlopeMin, snch::kRateSlopeMax, r.in_band);
  return band(r.passed && r.in_band, c.strict, "rate slope");
}

int cmd_cdep(const Common& c) {
  const snch::RunConfig cfg = load(c);
  const auto checks = snch::check_assumptions(cfg);
  Timer timer;
  const auto r = snch::cdep_study(cfg.study_setup(), cfg.experiment.deltas,
                                  snch::basis_direction(cfg.grid, cfg.experiment.direction_mode));
  snch::OutputDir out(cfg.run.out_dir);
  out.write("cdep.csv", snch::cdep_table(r));
  out.write_manifest("cdep-study", cfg, checks, timer.seconds(),
                     {{"spread", r.spread}, {"spread_max", snch::kCdepSpreadMax}, {"passed", r.passed}});
  std::printf("cdep-study: spread %.4g (max %.1f), passed %d\n", r.spread, snch::kCdepSpreadMax, r.passed);
  return band(r.passed, c.strict, "continuous-dependence ratio spread");
}

int cmd_yosida(const Common& c) {
  const snch::RunConfig cfg = load(c);
  const auto checks = snch::check_assumptions(cfg);
  Timer timer;
  const auto r = snch::yosida_study(cfg.study_setup(), cfg.experiment.lambdas);
  snch::OutputDir out(cfg.run.out_dir);
  out.write("yosida.csv", snch::yosida_table(r));
  out.write_manifest("yosida-study", cfg, checks, timer.seconds(), {{"monotone", r.monotone}});
  std::printf("yosida-study: monotone %d\n", r.monotone);
  return band(r.monotone, c.strict, "Yosida distance sequence");
}

int cmd_refinement(const Common& c) {
  const snch::RunConfig cfg = load(c);
  const auto checks = snch::check_assumptions(cfg);
  Timer timer;
  const auto setup = cfg.study_setup();
  const auto r = snch::refinement_study(setup, cfg.experiment.mode_counts, cfg.experiment.dt_halvings);
  const auto ito = snch::ito_study(setup, cfg.experiment.dt_halvings);
  snch::OutputDir out(cfg.run.out_dir);
  out.write("refinement.csv", snch::refinement_table(r));
  out.write("ito.csv", snch::ito_table(ito));
  out.write_manifest("refinement-study", cfg, checks, timer.seconds(),
                     {{"modes_decreasing", r.modes_decreasing},
                      {"dt_ratios_in_band", r.dt_ratios_in_band},
                      {"dt_ratio_band", {snch::kDtRatioMin, snch::kDtRatioMax}},
                      {"ito_ratios_in_band", ito.passed},
                      {"ito_ratio_band", {snch::kItoRatioMin, snch::kItoRatioMax}}});
  std::printf("refinement-study: modes decreasing %d, dt ratios in [%.1f, %.1f] %d, ito ratios in [%.1f, %.1f] %d\n",
              r.modes_decreasing, snch::kDtRatioMin, snch::kDtRatioMax, r.dt_ratios_in_band, snch::kItoRatioMin,
              snch::kItoRatioMax, ito.passed);
  return band(r.modes_decreasing && r.dt_ratios_in_band && ito.passed, c.strict, "refinement sequence");
}

int cmd_kernel_check(const Common& c) {
  const snch::RunConfig cfg = load(c);
  cfg.grid.validate();
  Timer timer;
  std::vector<double> eps = cfg.experiment.epsilons;
  double window = 0.0;
  for (double e : eps) window = std::max(window, 2.25 * e);
  std::vector<snch::KernelCheckRow> rows;
  for (auto fam : {snch::MollifierFamily::gaussian_r2, snch::MollifierFamily::annular})
    for (double e : eps) {
      const snch::MollifierSpec m{fam, e, cfg.grid.dim};
      const auto k = snch::build_kernel(m, cfg.grid);
      rows.push_back({fam, e, cfg.grid.dim, snch::normalization_residual(m), snch::consistency_error(*k, window),
                      k->a_min()});
    }
  snch::OutputDir out(cfg.run.out_dir);
  out.write("kernel_check.csv", snch::kernel_check_table(rows));
  out.write_manifest("kernel-check", cfg, {}, timer.seconds(), {{"consistency_window", window}});
  std::cout << snch::kernel_check_table(rows).str();
  return kOk;
}

/// Seconds-long smoke checks of every module.
int cmd_selftest() {
  int failures = 0;
  auto check = [&](const char* name, bool ok) {
    std::printf("%s %s\n", ok ? "ok  " : "FAIL", name);
    failures += ok ? 0 : 1;
  };
  const auto kat = snch::philox4x32_10({0, 0, 0, 0}, {0, 0});
  check("philox known answer", kat[0] == 0x6627e8d5u && kat[3] == 0x9b00dbd8u);

  const snch::MollifierSpec m{snch::MollifierFamily::gaussian_r2, 0.1, 2};
  check("mollifier normalization", snch::normalization_residual(m) < 1e-6);

  snch::RunConfig cfg;
  cfg.grid = snch::GridSpec::line(64);
  cfg.solver.t_end = 0.01;
  cfg.noise.modes = 4;
  const auto setup = cfg.study_setup();
  const auto p = setup.problem(cfg.solver, setup.kernel(cfg.kernel.epsilon));
  const auto a = p.run_path(setup.initial, 0);
  const auto b = p.run_path(setup.initial, 0);
  check("path determinism", a.final_field.values == b.final_field.values);
  check("mass conservation", std::abs(a.mass.back() - a.mass.front()) < 1e-12);

  const snch::RunConfig back = snch::parse_config(snch::to_ini(cfg));
  check("config round trip", snch::to_ini(back) == snch::to_ini(cfg));
  return failures == 0 ? kOk : kOther;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral-Galerkin simulator for the stochastic nonlocal Cahn-Hilliard equation"};
  app.set_version_flag("--version", std::string(SNCH_VERSION));
  app.require_subcommand(1);

  Common common;
  bool print_config = false;
  auto* sim = app.add_subcommand("simulate", "run an ensemble and write time series");
  add_common(sim, common);
  sim->add_flag("--print-config", print_config, "print the effective configuration with defaults and exit");
  auto* rate = app.add_subcommand("rate-study", "nonlocal-to-local convergence rate in epsilon");
  add_common(rate, common);
  auto* cdep = app.add_subcommand("cdep-study", "continuous dependence on the initial datum");
  add_common(cdep, common);
  auto* yos = app.add_subcommand("yosida-study", "convergence as the Yosida parameter vanishes");
  add_common(yos, common);
  auto* ref = app.add_subcommand("refinement-study", "Galerkin, time-step and energy-balance refinement");
  add_common(ref, common);
  auto* kc = app.add_subcommand("kernel-check", "kernel normalization and consistency table");
  add_common(kc, common);
  auto* self = app.add_subcommand("selftest", "fast internal checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(common, print_config);
    if (rate->parsed()) return cmd_rate(common);
    if (cdep->parsed()) return cmd_cdep(common);
    if (yos->parsed()) return cmd_yosida(common);
    if (ref->parsed()) return cmd_refinement(common);
    if (kc->parsed()) return cmd_kernel_check(common);
    if (self->parsed()) return cmd_selftest();
  } catch (const snch::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalid;
  } catch (const snch::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalid;
  } catch (const snch::UnresolvedKernel& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalid;
  } catch (const snch::NonFinite& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNonFinite;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
  return kOther;
}
