#include "wcd/config.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace wcd {

using nlohmann::json;

void apply_preset(Scenario& s) {
  if (s.preset.empty()) return;
  if (s.preset == "BR2-400") {
    s.temperature_c = 400.0;
    s.dose_dpa = 1.02;
    s.duration_days = 186.0;
  } else if (s.preset == "BR2-600") {
    s.temperature_c = 600.0;
    s.dose_dpa = 1.06;
    s.duration_days = 186.0;
  } else {
    throw std::invalid_argument("unknown scenario preset: " + s.preset);
  }
}

namespace {

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_scenario(const json& j, Scenario& s) {
  get_if(j, "preset", s.preset);
  apply_preset(s);
  get_if(j, "temperature_C", s.temperature_c);
  get_if(j, "dose_dpa", s.dose_dpa);
  get_if(j, "duration_days", s.duration_days);
}

void parse_material(const json& j, MaterialParams& m) {
  get_if(j, "a0_m", m.a0);
  get_if(j, "burgers_m", m.burgers);
  get_if(j, "dislocation_density_m2", m.rho_d);
  get_if(j, "grain_radius_m", m.grain_radius);
  get_if(j, "dislocation_capture_radius_m", m.r_d);
  get_if(j, "dislocation_bias", m.bias_z);
  get_if(j, "trap_radius_factor", m.r_t_factor);
  get_if(j, "void_surface_energy_J_m2", m.gamma_surface);
  get_if(j, "sia_formation_energy_eV", m.ef_sia);
  get_if(j, "vacancy_formation_energy_eV", m.ef_vacancy);
  get_if(j, "trap_interstitial_appm", m.trap_interstitial_appm);
  get_if(j, "trap_transmuted_density_m3", m.trap_transmuted_density);
  get_if(j, "detrap_attempt_frequency_s", m.nu_detrap);
  get_if(j, "detrap_energy_eV", m.e_detrap);
  get_if(j, "sample_thickness_m", m.sample_thickness);
  get_if(j, "migration_angle_rad", m.migration_angle);
  get_if(j, "loop100_d0_m2s", m.loop100_d0);
  get_if(j, "loop100_em_eV", m.loop100_em);
  get_if(j, "route_trapped_diffusivity_into_1d", m.route_trapped_diffusivity_into_1d);
  if (j.contains("fit_111")) {
    auto& f = j.at("fit_111");
    m.fit_111 = {f.at(0).get<double>(), f.at(1).get<double>(), f.at(2).get<double>()};
  }
  if (j.contains("fit_100")) {
    auto& f = j.at("fit_100");
    m.fit_100 = {f.at(0).get<double>(), f.at(1).get<double>(), f.at(2).get<double>()};
  }
}

json scenario_json(const Scenario& s) {
  json j;
  if (!s.preset.empty()) j["preset"] = s.preset;
  j["temperature_C"] = s.temperature_c;
  j["dose_dpa"] = s.dose_dpa;
  j["duration_days"] = s.duration_days;
  return j;
}

json material_json(const MaterialParams& m) {
  json j;
  j["a0_m"] = m.a0;
  j["burgers_m"] = m.burgers;
  j["dislocation_density_m2"] = m.rho_d;
  j["grain_radius_m"] = m.grain_radius;
  j["dislocation_capture_radius_m"] = m.r_d;
  j["dislocation_bias"] = m.bias_z;
  j["trap_radius_factor"] = m.r_t_factor;
  j["void_surface_energy_J_m2"] = m.gamma_surface;
  j["sia_formation_energy_eV"] = m.ef_sia;
  j["vacancy_formation_energy_eV"] = m.ef_vacancy;
  j["fit_111"] = {m.fit_111.a1, m.fit_111.a2, m.fit_111.a3};
  j["fit_100"] = {m.fit_100.a1, m.fit_100.a2, m.fit_100.a3};
  j["trap_interstitial_appm"] = m.trap_interstitial_appm;
  j["trap_transmuted_density_m3"] = m.trap_transmuted_density;
  j["detrap_attempt_frequency_s"] = m.nu_detrap;
  j["detrap_energy_eV"] = m.e_detrap;
  j["sample_thickness_m"] = m.sample_thickness;
  j["migration_angle_rad"] = m.migration_angle;
  j["loop100_d0_m2s"] = m.loop100_d0;
  j["loop100_em_eV"] = m.loop100_em;
  j["route_trapped_diffusivity_into_1d"] = m.route_trapped_diffusivity_into_1d;
  return j;
}

}  // namespace

SimulationConfig SimulationConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  SimulationConfig c;
  if (j.contains("scenario")) parse_scenario(j.at("scenario"), c.scenario);
  if (j.contains("physics")) {
    const json& p = j.at("physics");
    get_if(p, "cascade_overlap", c.toggles.cascade_overlap);
    get_if(p, "traps", c.toggles.traps);
    get_if(p, "loop_reaction", c.toggles.loop_reaction);
    get_if(p, "surface_sinks", c.toggles.surface_sinks);
  }
  if (j.contains("material")) parse_material(j.at("material"), c.material);
  if (j.contains("production")) {
    const json& p = j.at("production");
    get_if(p, "s_interstitial", c.production.s_interstitial);
    get_if(p, "s_vacancy", c.production.s_vacancy);
    get_if(p, "n_max_interstitial", c.production.n_max_interstitial);
    get_if(p, "n_max_vacancy", c.production.n_max_vacancy);
    get_if(p, "fraction_c15", c.production.f_c15);
    get_if(p, "fraction_loop100", c.production.f_loop100);
    get_if(p, "defect_fraction", c.production.defect_fraction);
  }
  if (j.contains("overlap")) {
    const json& p = j.at("overlap");
    get_if(p, "rate_per_s", c.overlap.f_ol);
    get_if(p, "f_111_to_100", c.overlap.f_111_to_100);
    get_if(p, "f_100_to_111", c.overlap.f_100_to_111);
    get_if(p, "f_void", c.overlap.f_void);
  }
  if (j.contains("grouping")) {
    const json& p = j.at("grouping");
    get_if(p, "enabled", c.grouping_enabled);
    get_if(p, "n_exact", c.grouping.n_exact);
    get_if(p, "ratio", c.grouping.ratio);
    get_if(p, "n_max_interstitial", c.n_max_interstitial);
    get_if(p, "n_max_vacancy", c.n_max_vacancy);
  }
  if (j.contains("solver")) {
    const json& p = j.at("solver");
    get_if(p, "rtol", c.solver.rtol);
    get_if(p, "atol", c.solver.atol);
    get_if(p, "max_step_s", c.solver.max_step);
    get_if(p, "initial_step_s", c.solver.initial_step);
    get_if(p, "max_order", c.solver.max_order);
    get_if(p, "max_steps", c.solver.max_steps);
  }
  if (j.contains("output")) {
    const json& p = j.at("output");
    get_if(p, "dir", c.output_dir);
    get_if(p, "max_dose_dpa", c.max_dose_dpa);
    get_if(p, "snapshots_per_decade", c.snapshots_per_decade);
    get_if(p, "snapshot_min_dose", c.snapshot_min_dose);
    get_if(p, "histogram_bin_nm", c.histogram_bin_nm);
    get_if(p, "loop_cutoff_nm", c.loop_cutoff_nm);
    get_if(p, "void_cutoff_nm", c.void_cutoff_nm);
  }
  return c;
}

std::string SimulationConfig::to_json_text() const {
  json j;
  j["scenario"] = scenario_json(scenario);
  j["physics"] = {{"cascade_overlap", toggles.cascade_overlap},
                  {"traps", toggles.traps},
                  {"loop_reaction", toggles.loop_reaction},
                  {"surface_sinks", toggles.surface_sinks}};
  j["material"] = material_json(material);
  j["production"] = {{"s_interstitial", production.s_interstitial},
                     {"s_vacancy", production.s_vacancy},
                     {"n_max_interstitial", production.n_max_interstitial},
                     {"n_max_vacancy", production.n_max_vacancy},
                     {"fraction_c15", production.f_c15},
                     {"fraction_loop100", production.f_loop100},
                     {"defect_fraction", production.defect_fraction}};
  j["overlap"] = {{"rate_per_s", overlap.f_ol},
                  {"f_111_to_100", overlap.f_111_to_100},
                  {"f_100_to_111", overlap.f_100_to_111},
                  {"f_void", overlap.f_void}};
  j["grouping"] = {{"enabled", grouping_enabled},
                   {"n_exact", grouping.n_exact},
                   {"ratio", grouping.ratio},
                   {"n_max_interstitial", n_max_interstitial},
                   {"n_max_vacancy", n_max_vacancy}};
  j["solver"] = {{"rtol", solver.rtol},
                 {"atol", solver.atol},
                 {"max_step_s", solver.max_step == std::numeric_limits<double>::infinity()
                                    ? json()
                                    : json(solver.max_step)},
                 {"initial_step_s", solver.initial_step},
                 {"max_order", solver.max_order},
                 {"max_steps", solver.max_steps}};
  if (j["solver"]["max_step_s"].is_null()) j["solver"].erase("max_step_s");
  j["output"] = {{"dir", output_dir},
                 {"max_dose_dpa", max_dose_dpa},
                 {"snapshots_per_decade", snapshots_per_decade},
                 {"snapshot_min_dose", snapshot_min_dose},
                 {"histogram_bin_nm", histogram_bin_nm},
                 {"loop_cutoff_nm", loop_cutoff_nm},
                 {"void_cutoff_nm", void_cutoff_nm}};
  return j.dump(2) + "\n";
}

SimulationConfig SimulationConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void SimulationConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  out << to_json_text();
}

std::string SimulationConfig::validate() const {
  if (scenario.temperature_c <= -273.15) return "scenario.temperature_C: below absolute zero";
  if (scenario.dose_dpa <= 0.0) return "scenario.dose_dpa: must be > 0";
  if (scenario.duration_days <= 0.0) return "scenario.duration_days: must be > 0";
  if (max_dose_dpa < 0.0) return "output.max_dose_dpa: must be >= 0";
  if (snapshots_per_decade < 1) return "output.snapshots_per_decade: must be >= 1";
  if (!(snapshot_min_dose > 0.0)) return "output.snapshot_min_dose: must be > 0";
  if (!(histogram_bin_nm > 0.0)) return "output.histogram_bin_nm: must be > 0";
  std::string err = material_at_temperature().validate();
  if (!err.empty()) return "material." + err;
  err = solver.validate();
  if (!err.empty()) return "solver." + err;
  err = system_config().validate();
  if (!err.empty()) return err;
  return {};
}

MaterialParams SimulationConfig::material_at_temperature() const {
  MaterialParams m = material;
  m.temperature = temperature_k();
  return m;
}

SystemConfig SimulationConfig::system_config() const {
  SystemConfig sc;
  sc.n_max_interstitial = n_max_interstitial;
  sc.n_max_vacancy = n_max_vacancy;
  sc.scheme = grouping_enabled ? grouping : GroupScheme::exact_only();
  sc.toggles = toggles;
  sc.production = production;
  sc.overlap = overlap;
  sc.dose_rate_dpa_s = dose_rate_dpa_s();
  return sc;
}

std::uint64_t SimulationConfig::physics_hash() const {
  json j;
  j["scenario"] = scenario_json(scenario);
  j["physics"] = {{"cascade_overlap", toggles.cascade_overlap},
                  {"traps", toggles.traps},
                  {"loop_reaction", toggles.loop_reaction},
                  {"surface_sinks", toggles.surface_sinks}};
  j["material"] = material_json(material);
  j["production"] = {production.s_interstitial, production.s_vacancy,
                     production.n_max_interstitial, production.n_max_vacancy,
                     production.f_c15, production.f_loop100, production.defect_fraction};
  j["overlap"] = {overlap.f_ol, overlap.f_111_to_100, overlap.f_100_to_111, overlap.f_void};
  j["grouping"] = {grouping_enabled, grouping.n_exact, grouping.ratio, n_max_interstitial,
                   n_max_vacancy};
  j["solver"] = {solver.rtol, solver.atol, solver.max_order};
  j["max_dose"] = max_dose_dpa;
  std::string s = j.dump();
  // FNV-1a
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace wcd
