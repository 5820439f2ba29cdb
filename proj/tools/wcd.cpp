// Command-line front end: scenario runs, toggle sweeps, experimental
// comparison, overlap-rate estimation and config validation.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wcd/config.hpp"
#include "wcd/run.hpp"
#include "wcd/source.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir, double max_dose,
            bool strict) {
  wcd::SimulationConfig config = wcd::SimulationConfig::load(config_path);
  if (max_dose > 0.0) config.max_dose_dpa = max_dose;
  wcd::RunResult r = wcd::run_simulation(config, out_dir);
  std::printf("run complete: %s\n", r.run_dir.c_str());
  std::printf("  final dose: %.6g dpa in %ld steps\n", r.final_state.dose,
              r.integration.stats.steps);
  std::printf("  loop density: %.4g cm^-3, void density: %.4g cm^-3\n",
              r.series.empty() ? 0.0 : r.series.back().loop_density,
              r.series.empty() ? 0.0 : r.series.back().void_density);
  std::printf("  mass closure error: %.3g (interstitial), %.3g (vacancy)\n",
              r.mass.closure_error_interstitial(), r.mass.closure_error_vacancy());
  if (!r.complete) {
    std::fprintf(stderr, "integration incomplete: %s\n", r.integration.message.c_str());
    return 2;
  }
  if (strict) {
    double closure = std::max(r.mass.closure_error_interstitial(),
                              r.mass.closure_error_vacancy());
    double terminal = std::max(r.mass.terminal_fraction_interstitial,
                               r.mass.terminal_fraction_vacancy);
    if (closure > 1e-3 || terminal > 0.005) {
      std::fprintf(stderr, "strict checks failed: closure %.3g, terminal fraction %.3g\n",
                   closure, terminal);
      return 3;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wcd: cluster dynamics of irradiation defects in tungsten"};
  app.require_subcommand(1);

  std::string config_path, out_dir, exp_file, run_dir, spectrum_file, family = "loops";
  double max_dose = 0.0;
  bool strict = false;
  int jobs = 1;

  auto* run = app.add_subcommand("run", "integrate one scenario and write the results bundle");
  run->add_option("config", config_path, "configuration file (JSON)")->required();
  run->add_option("--out", out_dir, "output directory override");
  run->add_option("--max-dose", max_dose, "stop at this dose (dpa)");
  run->add_flag("--strict", strict, "fail on ledger-closure or terminal-bin warnings");

  auto* sweep = app.add_subcommand("sweep", "run the overlap x traps x reaction toggle grid");
  sweep->add_option("config", config_path, "configuration file (JSON)")->required();
  sweep->add_option("--out", out_dir, "output directory override");
  sweep->add_option("--max-dose", max_dose, "stop at this dose (dpa)");
  sweep->add_option("--jobs", jobs, "parallel workers")->check(CLI::Range(1, 64));
  bool toggle_grid = false;
  sweep->add_flag("--toggle-grid", toggle_grid, "accepted for compatibility (always on)");

  auto* compare = app.add_subcommand("compare", "compare a run against experimental data");
  compare->add_option("run_dir", run_dir, "finished run directory")->required();
  compare->add_option("exp_file", exp_file, "experimental histogram (center_nm density_cm3)")
      ->required();
  compare->add_option("--family", family, "loops or voids");

  auto* fol = app.add_subcommand("estimate-fol", "overlap rate from a PKA spectrum file");
  fol->add_option("spectrum", spectrum_file, "two-column text (energy_eV rate_per_atom_per_s)")
      ->required();

  auto* validate = app.add_subcommand("validate", "check a configuration file");
  validate->add_option("config", config_path, "configuration file (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, max_dose, strict);

    if (sweep->parsed()) {
      wcd::SimulationConfig config = wcd::SimulationConfig::load(config_path);
      if (max_dose > 0.0) config.max_dose_dpa = max_dose;
      auto results = wcd::run_toggle_sweep(config, jobs, out_dir);
      int bad = 0;
      for (const auto& r : results) {
        std::printf("%s: %s\n", r.run_dir.c_str(), r.complete ? "ok" : "incomplete");
        if (!r.complete) ++bad;
      }
      return bad == 0 ? 0 : 2;
    }

    if (compare->parsed()) {
      wcd::CompareResult c = wcd::compare_with_experiment(run_dir, exp_file, family);
      std::fputs(c.table_text.c_str(), stdout);
      return 0;
    }

    if (fol->parsed()) {
      wcd::PkaSpectrum spectrum = wcd::PkaSpectrum::load(spectrum_file);
      wcd::MaterialParams mat;
      std::string warning;
      double rate = wcd::estimate_overlap_rate(spectrum, mat, &warning);
      if (!warning.empty()) std::fprintf(stderr, "warning: %s\n", warning.c_str());
      std::printf("F_ol = %.6g /s\n", rate);
      return 0;
    }

    if (validate->parsed()) {
      wcd::SimulationConfig config = wcd::SimulationConfig::load(config_path);
      std::string err = config.validate();
      if (!err.empty()) {
        std::fprintf(stderr, "invalid: %s\n", err.c_str());
        return 1;
      }
      std::printf("ok\n");
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
