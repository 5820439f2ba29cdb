#pragma once

#include <cstdint>
#include <string>

#include "wcd/assembly.hpp"
#include "wcd/integrator.hpp"

namespace wcd {

struct Scenario {
  std::string preset;  // "BR2-400", "BR2-600", or empty
  double temperature_c = 400.0;
  double dose_dpa = 1.02;
  double duration_days = 186.0;
};

// Full run configuration. Serialized as JSON; every field has a committed
// default so a minimal file like {"scenario":{"preset":"BR2-400"}} is enough.
struct SimulationConfig {
  Scenario scenario;
  PhysicsToggles toggles;
  MaterialParams material;   // temperature is overwritten from the scenario
  ProductionSpec production;
  OverlapSpec overlap;
  GroupScheme grouping;
  bool grouping_enabled = true;
  int n_max_interstitial = 50000;
  int n_max_vacancy = 500000;
  SolverConfig solver;

  double max_dose_dpa = 0.0;  // 0 = run to the full scenario dose
  int snapshots_per_decade = 4;
  double snapshot_min_dose = 1e-6;  // dpa
  double histogram_bin_nm = 0.5;
  double loop_cutoff_nm = 0.0;
  double void_cutoff_nm = 0.0;
  std::string output_dir = "out";

  static SimulationConfig load(const std::string& path);
  static SimulationConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
  void save(const std::string& path) const;

  std::string validate() const;

  double temperature_k() const { return scenario.temperature_c + 273.15; }
  double duration_s() const { return scenario.duration_days * 86400.0; }
  double dose_rate_dpa_s() const { return scenario.dose_dpa / duration_s(); }
  double target_dose() const {
    return max_dose_dpa > 0.0 ? std::min(max_dose_dpa, scenario.dose_dpa) : scenario.dose_dpa;
  }

  MaterialParams material_at_temperature() const;
  SystemConfig system_config() const;

  // Hash over the physics-relevant configuration (scenario, toggles,
  // material, production, overlap, grouping, caps, solver tolerances);
  // output paths and snapshot cosmetics do not contribute.
  std::uint64_t physics_hash() const;
};

void apply_preset(Scenario& scenario);

}  // namespace wcd
