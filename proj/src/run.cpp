#include "wcd/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace wcd {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_file(tmp, content);
  fs::rename(tmp, path);
}

std::string table_header(const RunResult& r, const std::string& extra) {
  std::string s;
  s += "# generator: " + std::string(kCodeVersion) + "\n";
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(r.manifest_hash));
  s += "# manifest_hash: " + std::string(hash) + "\n";
  s += "# rtol: " + fmt(r.config.solver.rtol) + "  atol: " + fmt(r.config.solver.atol) + "\n";
  if (!extra.empty()) s += extra;
  return s;
}

class SystemOde final : public OdeProblem {
 public:
  explicit SystemOde(const System& sys) : sys_(sys) {}
  int size() const override { return sys_.n_unknowns(); }
  void rhs(double, const Eigen::VectorXd& y, Eigen::VectorXd& f) const override {
    sys_.rhs(y, f);
  }
  void jacobian(double, const Eigen::VectorXd& y, Eigen::MatrixXd& jac) const override {
    sys_.jacobian(y, jac);
  }

 private:
  const System& sys_;
};

std::string histogram_table(const RunResult& r, const SizeHistogram& h) {
  std::string s = table_header(
      r, "# columns: d_lo_nm d_hi_nm density_cm3\n# family: " +
             std::string(family_name(h.family)) + "\n# cutoff_nm: " + fmt(h.cutoff_nm) + "\n");
  s += "d_lo_nm\td_hi_nm\tdensity_cm3\n";
  for (std::size_t b = 0; b < h.density_cm3.size(); ++b) {
    s += fmt(h.edges_nm[b]) + "\t" + fmt(h.edges_nm[b + 1]) + "\t" + fmt(h.density_cm3[b]) +
         "\n";
  }
  return s;
}

SizeHistogram merge_histograms(const SizeHistogram& a, const SizeHistogram& b) {
  SizeHistogram out = a.density_cm3.size() >= b.density_cm3.size() ? a : b;
  const SizeHistogram& small = a.density_cm3.size() >= b.density_cm3.size() ? b : a;
  for (std::size_t i = 0; i < small.density_cm3.size(); ++i)
    out.density_cm3[i] += small.density_cm3[i];
  return out;
}

}  // namespace

std::string resolve_output_dir(const std::string& dir) {
  const char* root = std::getenv("WCD_OUTPUT_ROOT");
  if (root && *root && fs::path(dir).is_relative()) return (fs::path(root) / dir).string();
  return dir;
}

RunResult run_simulation(const SimulationConfig& config, const std::string& out_dir_override) {
  RunResult result;
  result.config = config;
  std::string err = config.validate();
  if (!err.empty()) throw std::invalid_argument("invalid configuration: " + err);
  result.manifest_hash = config.physics_hash();

  MaterialParams mat = config.material_at_temperature();
  result.system = std::make_shared<System>(mat, config.system_config());
  const System& sys = *result.system;

  // log-spaced snapshot schedule in dose, ending exactly at the target dose
  const double rate = config.dose_rate_dpa_s();
  const double target_dose = config.target_dose();
  std::vector<double> snap_times;
  {
    double d = std::min(config.snapshot_min_dose, target_dose);
    double factor = std::pow(10.0, 1.0 / config.snapshots_per_decade);
    while (d < target_dose * (1.0 - 1e-12)) {
      snap_times.push_back(d / rate);
      d *= factor;
    }
    snap_times.push_back(target_dose / rate);
  }
  const double t_end = target_dose / rate;

  SystemOde ode(sys);
  Eigen::VectorXd y = sys.initial_state();
  auto wall0 = std::chrono::steady_clock::now();
  result.integration = integrate(
      ode, y, 0.0, t_end, config.solver, snap_times,
      [&](double t, const Eigen::VectorXd& ys) {
        StateVector sv;
        sv.time = t;
        sv.dose = t * rate;
        sv.y = ys;
        result.snapshots.push_back(std::move(sv));
      });
  double wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();

  result.complete = result.integration.ok();
  result.final_state.time = result.complete ? t_end : (result.snapshots.empty()
                                                           ? 0.0
                                                           : result.snapshots.back().time);
  result.final_state.dose = result.final_state.time * rate;
  result.final_state.y = y;
  if (result.complete) {
    result.final_state.time = t_end;
    result.final_state.dose = target_dose;
  }

  for (const auto& sv : result.snapshots)
    result.series.push_back(averages_and_inventories(sys, sv));
  result.mass = sys.mass_report(result.final_state);

  // --- write the bundle
  fs::path dir = resolve_output_dir(out_dir_override.empty() ? config.output_dir
                                                             : out_dir_override);
  fs::create_directories(dir);
  result.run_dir = dir.string();

  write_file(dir / "config_resolved.json", config.to_json_text());

  {  // dose series
    std::string s = table_header(result,
                                 "# units: densities cm^-3, diameters nm, transfer SIAs/m^3/s\n");
    s += "dose_dpa\ttime_s\tloop_density\tloop111_density\tloop100_density\tc15_density\t"
         "void_density\tavg_loop_d_nm\tavg_loop111_d_nm\tavg_loop100_d_nm\tavg_void_d_nm\t"
         "max_loop111_d_nm\tsias_in_111\tsias_in_100\tsias_in_c15\tc15_loop_sia_ratio\t"
         "vacancies_in_voids\ttran111_total\ttran100_total\n";
    for (const auto& r : result.series) {
      s += fmt(r.dose) + "\t" + fmt(r.time) + "\t" + fmt(r.loop_density) + "\t" +
           fmt(r.loop111_density) + "\t" + fmt(r.loop100_density) + "\t" + fmt(r.c15_density) +
           "\t" + fmt(r.void_density) + "\t" + fmt(r.avg_loop_diameter) + "\t" +
           fmt(r.avg_loop111_diameter) + "\t" + fmt(r.avg_loop100_diameter) + "\t" +
           fmt(r.avg_void_diameter) + "\t" + fmt(r.max_loop111_diameter) + "\t" +
           fmt(r.sias_in_loop111) + "\t" + fmt(r.sias_in_loop100) + "\t" +
           fmt(r.sias_in_c15) + "\t" + fmt(r.c15_to_loop_sia_ratio) + "\t" +
           fmt(r.vacancies_in_voids) + "\t" +
           (r.transfer_defined ? fmt(r.tran111_total) : std::string("nan")) + "\t" +
           (r.transfer_defined ? fmt(r.tran100_total) : std::string("nan")) + "\n";
    }
    write_file(dir / "dose_series.tsv", s);
  }

  {  // per-snapshot state dumps (bin-resolved)
    std::string s = table_header(result, "# columns per bin at each snapshot\n");
    s += "dose_dpa\tfamily\ttrapped\tn_lo\tn_hi\tcount_m3\tmass_m3\n";
    for (const auto& sv : result.snapshots) {
      for (std::size_t i = 0; i < sys.nodes().size(); ++i) {
        const Node& nd = sys.nodes()[i];
        double c = sys.bin_count(sv.y, static_cast<int>(i));
        if (c == 0.0) continue;
        s += fmt(sv.dose) + "\t" + family_name(nd.family) + "\t" +
             (nd.trapped ? "1" : "0") + "\t" + std::to_string(nd.lo) + "\t" +
             std::to_string(nd.hi) + "\t" + fmt(c) + "\t" +
             fmt(sys.bin_mass(sv.y, static_cast<int>(i))) + "\n";
      }
    }
    write_file(dir / "states.tsv", s);
  }

  {  // final-state histograms
    const auto& y_fin = result.final_state.y;
    SizeHistogram h111 =
        size_histogram(sys, y_fin, DefectFamily::Loop111, config.histogram_bin_nm, 0.0);
    SizeHistogram h100 =
        size_histogram(sys, y_fin, DefectFamily::Loop100, config.histogram_bin_nm, 0.0);
    SizeHistogram hvoid =
        size_histogram(sys, y_fin, DefectFamily::Void, config.histogram_bin_nm, 0.0);
    SizeHistogram hc15 =
        size_histogram(sys, y_fin, DefectFamily::C15, config.histogram_bin_nm, 0.0);
    write_file(dir / "histogram_loop111.tsv", histogram_table(result, h111));
    write_file(dir / "histogram_loop100.tsv", histogram_table(result, h100));
    write_file(dir / "histogram_void.tsv", histogram_table(result, hvoid));
    write_file(dir / "histogram_c15.tsv", histogram_table(result, hc15));
    SizeHistogram total = merge_histograms(h111, h100);
    write_file(dir / "histogram_loops.tsv", histogram_table(result, total));
    if (config.loop_cutoff_nm > 0.0) {
      SizeHistogram vis = size_histogram(sys, y_fin, DefectFamily::Loop111,
                                         config.histogram_bin_nm, config.loop_cutoff_nm);
      SizeHistogram vis100 = size_histogram(sys, y_fin, DefectFamily::Loop100,
                                            config.histogram_bin_nm, config.loop_cutoff_nm);
      write_file(dir / "histogram_loops_visible.tsv",
                 histogram_table(result, merge_histograms(vis, vis100)));
    }
    if (config.void_cutoff_nm > 0.0) {
      SizeHistogram vis = size_histogram(sys, y_fin, DefectFamily::Void,
                                         config.histogram_bin_nm, config.void_cutoff_nm);
      write_file(dir / "histogram_void_visible.tsv", histogram_table(result, vis));
    }
  }

  {  // transfer rates at final dose
    TransferRates tr = transfer_rates(sys, result.final_state.y);
    std::string s = table_header(result, "# SIA transfer through the loop-loop reaction\n");
    if (!tr.defined) {
      s += "# loop reaction disabled: transfer rates undefined\n";
    } else {
      s += "family\tsize_n\tdiameter_nm\ttransfer_SIA_m3_s\n";
      for (auto [n, r] : tr.per_size_111)
        s += "loop111\t" + fmt(n) + "\t" +
             fmt(diameter_nm(DefectFamily::Loop111, std::max(n, 1.0), sys.params())) + "\t" +
             fmt(r) + "\n";
      for (auto [n, r] : tr.per_size_100)
        s += "loop100\t" + fmt(n) + "\t" +
             fmt(diameter_nm(DefectFamily::Loop100, std::max(n, 1.0), sys.params())) + "\t" +
             fmt(r) + "\n";
      s += "# total_111: " + fmt(tr.total_111) + "\n";
      s += "# total_100: " + fmt(tr.total_100) + "\n";
    }
    write_file(dir / "transfer_rates.tsv", s);
  }

  {  // final state per bin
    std::string s = table_header(result, "");
    s += "family\ttrapped\tn_lo\tn_hi\tcount_m3\tmass_m3\tmean_n\tdiameter_nm\n";
    for (std::size_t i = 0; i < sys.nodes().size(); ++i) {
      const Node& nd = sys.nodes()[i];
      double c = sys.bin_count(result.final_state.y, static_cast<int>(i));
      double m = sys.bin_mass(result.final_state.y, static_cast<int>(i));
      double mean_n = sys.bin_mean_size(result.final_state.y, static_cast<int>(i));
      double d = is_trap(nd.family) ? 0.0
                                    : diameter_nm(nd.family, std::max(mean_n, 1.0), sys.params());
      s += std::string(family_name(nd.family)) + "\t" + (nd.trapped ? "1" : "0") + "\t" +
           std::to_string(nd.lo) + "\t" + std::to_string(nd.hi) + "\t" + fmt(c) + "\t" +
           fmt(m) + "\t" + fmt(mean_n) + "\t" + fmt(d) + "\n";
    }
    write_file(dir / "state_final.tsv", s);
  }

  {  // mass ledger
    const MassReport& m = result.mass;
    std::string s = table_header(result, "# defects per m^3 unless noted\n");
    s += "quantity\tvalue\n";
    s += "produced_interstitial\t" + fmt(m.produced_interstitial) + "\n";
    s += "produced_vacancy\t" + fmt(m.produced_vacancy) + "\n";
    s += "in_state_interstitial\t" + fmt(m.in_state_interstitial) + "\n";
    s += "in_state_vacancy\t" + fmt(m.in_state_vacancy) + "\n";
    s += "sinks_interstitial\t" + fmt(m.sinks_interstitial) + "\n";
    s += "sinks_vacancy\t" + fmt(m.sinks_vacancy) + "\n";
    s += "recombined\t" + fmt(m.recombined) + "\n";
    s += "closure_error_interstitial\t" + fmt(m.closure_error_interstitial()) + "\n";
    s += "closure_error_vacancy\t" + fmt(m.closure_error_vacancy()) + "\n";
    s += "terminal_fraction_interstitial\t" + fmt(m.terminal_fraction_interstitial) + "\n";
    s += "terminal_fraction_vacancy\t" + fmt(m.terminal_fraction_vacancy) + "\n";
    write_file(dir / "ledger.tsv", s);
  }

  {  // manifest, written last and atomically
    nlohmann::json j;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(result.manifest_hash));
    j["config_hash"] = hash;
    j["code_version"] = kCodeVersion;
    j["rtol"] = config.solver.rtol;
    j["atol"] = config.solver.atol;
    j["wall_time_s"] = wall_s;
    j["complete"] = result.complete;
    j["final_dose_dpa"] = result.final_state.dose;
    j["terminal_fraction_interstitial"] = result.mass.terminal_fraction_interstitial;
    j["terminal_fraction_vacancy"] = result.mass.terminal_fraction_vacancy;
    j["steps"] = result.integration.stats.steps;
    j["rhs_evals"] = result.integration.stats.rhs_evals;
    j["jacobians"] = result.integration.stats.jacobians;
    j["clamped_mass"] = result.integration.stats.clamped_mass;
    std::vector<std::string> warnings;
    if (!result.complete)
      warnings.push_back("integration incomplete: " + result.integration.message);
    if (result.mass.terminal_fraction_interstitial > 0.005 ||
        result.mass.terminal_fraction_vacancy > 0.005)
      warnings.push_back("terminal-bin mass fraction exceeds 0.5%");
    double closure = std::max(result.mass.closure_error_interstitial(),
                              result.mass.closure_error_vacancy());
    if (closure > 1e-3) warnings.push_back("mass ledger closure worse than 0.1%");
    j["warnings"] = warnings;
    write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
  }

  return result;
}

std::vector<RunResult> run_toggle_sweep(const SimulationConfig& base, int jobs,
                                        const std::string& out_dir_override) {
  std::vector<SimulationConfig> configs;
  std::vector<std::string> names;
  for (int overlap = 0; overlap < 2; ++overlap)
    for (int traps = 0; traps < 2; ++traps)
      for (int reaction = 0; reaction < 2; ++reaction) {
        SimulationConfig c = base;
        c.toggles.cascade_overlap = overlap != 0;
        c.toggles.traps = traps != 0;
        c.toggles.loop_reaction = reaction != 0;
        std::string name = std::string("overlap") + (overlap ? "1" : "0") + "_traps" +
                           (traps ? "1" : "0") + "_reaction" + (reaction ? "1" : "0");
        fs::path root = resolve_output_dir(out_dir_override.empty() ? base.output_dir
                                                                    : out_dir_override);
        c.output_dir = (root / name).string();
        configs.push_back(c);
        names.push_back(name);
      }

  std::vector<RunResult> results(configs.size());
  jobs = std::max(1, jobs);
  std::size_t next = 0;
  std::mutex mtx;
  auto worker = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mtx);
        if (next >= configs.size()) return;
        i = next++;
      }
      results[i] = run_simulation(configs[i]);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

namespace {

struct HistFile {
  std::vector<double> lo, hi, density;
  double cutoff_nm = 0.0;
};

HistFile load_model_histogram(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model histogram: " + path);
  HistFile h;
  std::string line;
  bool header_seen = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("# cutoff_nm:", 0) == 0) {
      h.cutoff_nm = std::atof(line.substr(12).c_str());
      continue;
    }
    if (!line.empty() && line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header line
      continue;
    }
    std::istringstream ls(line);
    double a, b, c;
    if (ls >> a >> b >> c) {
      h.lo.push_back(a);
      h.hi.push_back(b);
      h.density.push_back(c);
    }
  }
  return h;
}

}  // namespace

CompareResult compare_with_experiment(const std::string& run_dir, const std::string& exp_file,
                                      const std::string& family) {
  CompareResult out;
  std::string hist_name;
  if (family == "loops")
    hist_name = "histogram_loops.tsv";
  else if (family == "voids")
    hist_name = "histogram_void.tsv";
  else
    throw std::invalid_argument("compare family must be 'loops' or 'voids'");
  HistFile model = load_model_histogram((fs::path(run_dir) / hist_name).string());

  // experimental file: center density pairs with optional cutoff metadata
  std::ifstream in(exp_file);
  if (!in) throw std::runtime_error("cannot open experimental file: " + exp_file);
  std::vector<std::pair<double, double>> exp;
  double exp_cutoff = 0.0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("# cutoff_nm:", 0) == 0) {
      exp_cutoff = std::atof(line.substr(12).c_str());
      continue;
    }
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double c, d;
    if (!(ls >> c)) continue;
    if (!(ls >> d))
      throw std::runtime_error(exp_file + ":" + std::to_string(lineno) +
                               ": expected two columns (bin_center_nm density_cm3)");
    exp.emplace_back(c, d);
  }
  if (exp.empty()) throw std::runtime_error(exp_file + ": no histogram rows found");

  out.cutoff_nm = exp_cutoff;
  if (model.cutoff_nm != exp_cutoff) {
    out.warnings.push_back("cutoff mismatch: model histogram cutoff " +
                           std::to_string(model.cutoff_nm) + " nm vs experimental metadata " +
                           std::to_string(exp_cutoff) + " nm");
  }

  double mod_num = 0.0;
  for (std::size_t b = 0; b < model.density.size(); ++b) {
    double center = 0.5 * (model.lo[b] + model.hi[b]);
    if (center < exp_cutoff) continue;
    out.model_total_cm3 += model.density[b];
    mod_num += center * model.density[b];
  }
  out.model_mean_nm = out.model_total_cm3 > 0.0 ? mod_num / out.model_total_cm3 : 0.0;

  double exp_num = 0.0;
  for (auto [center, density] : exp) {
    if (exp_cutoff > 0.0 && center < exp_cutoff) continue;
    out.exp_total_cm3 += density;
    exp_num += center * density;
    CompareRow row;
    row.center_nm = center;
    row.experimental_cm3 = density;
    for (std::size_t b = 0; b < model.density.size(); ++b) {
      if (center >= model.lo[b] && center < model.hi[b]) {
        row.model_cm3 = model.density[b];
        break;
      }
    }
    row.ratio = density > 0.0 ? row.model_cm3 / density : 0.0;
    out.rows.push_back(row);
  }
  out.exp_mean_nm = out.exp_total_cm3 > 0.0 ? exp_num / out.exp_total_cm3 : 0.0;

  std::string s;
  s += "# compare: " + family + " vs " + exp_file + "\n";
  s += "# cutoff_nm: " + fmt(exp_cutoff) + "\n";
  for (const auto& w : out.warnings) s += "# warning: " + w + "\n";
  s += "center_nm\texperimental_cm3\tmodel_cm3\tratio\n";
  for (const auto& r : out.rows)
    s += fmt(r.center_nm) + "\t" + fmt(r.experimental_cm3) + "\t" + fmt(r.model_cm3) + "\t" +
         fmt(r.ratio) + "\n";
  s += "# totals: experimental " + fmt(out.exp_total_cm3) + " cm^-3, model " +
       fmt(out.model_total_cm3) + " cm^-3, ratio " +
       fmt(out.exp_total_cm3 > 0 ? out.model_total_cm3 / out.exp_total_cm3 : 0.0) + "\n";
  s += "# means: experimental " + fmt(out.exp_mean_nm) + " nm, model " +
       fmt(out.model_mean_nm) + " nm\n";
  out.table_text = s;
  return out;
}

}  // namespace wcd
