#pragma once

#include <memory>
#include <string>
#include <vector>

#include "wcd/analysis.hpp"
#include "wcd/config.hpp"

namespace wcd {

inline constexpr const char* kCodeVersion = "wcd 1.0.0";

struct RunResult {
  SimulationConfig config;
  std::string run_dir;
  StateVector final_state;
  std::vector<StateVector> snapshots;
  std::vector<InventoryRow> series;
  MassReport mass;
  IntegrationResult integration;
  std::uint64_t manifest_hash = 0;
  bool complete = false;
  std::shared_ptr<System> system;
};

// Output root override (WCD_OUTPUT_ROOT env var) applied to relative paths.
std::string resolve_output_dir(const std::string& dir);

// Executes the scenario and writes the results bundle: dose_series.tsv,
// states.tsv, per-family histograms, transfer_rates.tsv, state_final.tsv,
// ledger.tsv, config_resolved.json and manifest.json (written atomically).
RunResult run_simulation(const SimulationConfig& config,
                         const std::string& out_dir_override = {});

// The {cascade_overlap x traps x loop_reaction} grid: eight runs in
// subdirectories named by the toggle pattern.
std::vector<RunResult> run_toggle_sweep(const SimulationConfig& base, int jobs = 1,
                                        const std::string& out_dir_override = {});

struct CompareRow {
  double center_nm = 0.0;
  double experimental_cm3 = 0.0;
  double model_cm3 = 0.0;
  double ratio = 0.0;
};

struct CompareResult {
  std::vector<CompareRow> rows;
  double exp_total_cm3 = 0.0;
  double model_total_cm3 = 0.0;
  double exp_mean_nm = 0.0;
  double model_mean_nm = 0.0;
  double cutoff_nm = 0.0;
  std::vector<std::string> warnings;
  std::string table_text;
};

// Aligns a model histogram from a finished run against an experimental
// two-column histogram file (bin_center_nm, density_cm3; '#' comments; an
// optional "# cutoff_nm: X" metadata line sets the visibility cutoff).
// `family` is "loops" (1/2<111> + <100>) or "voids".
CompareResult compare_with_experiment(const std::string& run_dir, const std::string& exp_file,
                                      const std::string& family);

}  // namespace wcd
