#include "wcd/source.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wcd {

std::string ProductionSpec::validate() const {
  if (s_interstitial <= 1.0 || s_vacancy <= 1.0) return "power-law exponents must be > 1";
  if (n_max_interstitial < 1 || n_max_vacancy < 1) return "production N_max must be >= 1";
  if (f_c15 < 0.0 || f_loop100 < 0.0 || f_c15 + f_loop100 > 1.0)
    return "cluster partition fractions must be in [0,1] and sum to <= 1";
  if (defect_fraction < 0.0 || defect_fraction >= 1.0)
    return "defect_fraction must be in [0,1)";
  return {};
}

double production_norm(double s, int n_max) {
  double sum = 0.0;
  for (int n = 1; n <= n_max; ++n) sum += std::pow(n, 1.0 - s);
  return sum;
}

double production_rate(int n, ProductionAxis axis, const ProductionSpec& spec,
                       double total_rate) {
  double s = axis == ProductionAxis::Interstitial ? spec.s_interstitial : spec.s_vacancy;
  int n_max = axis == ProductionAxis::Interstitial ? spec.n_max_interstitial
                                                   : spec.n_max_vacancy;
  if (n < 1 || n > n_max) return 0.0;
  double a = total_rate / production_norm(s, n_max);
  return a / std::pow(n, s) * (1.0 - spec.defect_fraction);
}

double dpa_to_rate(double dose_dpa, double duration_s, const MaterialParams& p) {
  if (duration_s <= 0.0) throw std::invalid_argument("dpa_to_rate: duration must be > 0");
  return dose_dpa / duration_s * p.atomic_density();
}

std::vector<double> production_vector(const SpeciesSet& species, const ProductionSpec& spec,
                                      double total_rate) {
  std::vector<double> g(species.size(), 0.0);
  for (int n = 1; n <= spec.n_max_interstitial; ++n) {
    double gn = production_rate(n, ProductionAxis::Interstitial, spec, total_rate);
    if (n <= 3) {
      g[species.index({DefectFamily::SiaPoint, n, false})] += gn;
    } else {
      g[species.index({DefectFamily::Loop111, n, false})] += spec.f_loop111() * gn;
      g[species.index({DefectFamily::C15, n, false})] += spec.f_c15 * gn;
      g[species.index({DefectFamily::Loop100, n, false})] += spec.f_loop100 * gn;
    }
  }
  for (int n = 1; n <= spec.n_max_vacancy; ++n) {
    double gn = production_rate(n, ProductionAxis::Vacancy, spec, total_rate);
    if (n <= 4)
      g[species.index({DefectFamily::VacancyPoint, n, false})] += gn;
    else
      g[species.index({DefectFamily::Void, n, false})] += gn;
  }
  return g;
}

std::string OverlapSpec::validate() const {
  if (f_ol < 0.0) return "overlap rate must be >= 0";
  auto frac = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!frac(f_111_to_100) || !frac(f_100_to_111) || !frac(f_void))
    return "overlap transformation fractions must be in [0,1]";
  return {};
}

PkaSpectrum PkaSpectrum::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open PKA spectrum file: " + path);
  PkaSpectrum spectrum;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double e, r;
    if (!(ls >> e)) continue;  // blank or comment-only line
    if (!(ls >> r))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected two columns (energy_eV rate_per_atom_per_s)");
    spectrum.bins.push_back({e, r});
  }
  std::string err = spectrum.validate();
  if (!err.empty()) throw std::runtime_error(path + ": " + err);
  return spectrum;
}

std::string PkaSpectrum::validate() const {
  if (bins.empty()) return "PKA spectrum is empty";
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (bins[i].rate_per_atom < 0.0) return "PKA rates must be >= 0";
    if (i > 0 && bins[i].energy_ev <= bins[i - 1].energy_ev)
      return "PKA energies must be strictly ascending";
  }
  if (e_fragment_ev <= 0.0 || v_fragment_m3 <= 0.0)
    return "fragmentation threshold parameters must be > 0";
  return {};
}

double estimate_overlap_rate(const PkaSpectrum& spectrum, const MaterialParams& p,
                             std::string* warning) {
  std::string err = spectrum.validate();
  if (!err.empty()) throw std::invalid_argument("estimate_overlap_rate: " + err);
  double a = spectrum.v_fragment_m3 / spectrum.e_fragment_ev;  // m^3 per eV
  double f_ol = 0.0;
  bool any_above = false;
  for (const auto& bin : spectrum.bins) {
    if (bin.energy_ev < spectrum.e_fragment_ev) continue;
    any_above = true;
    f_ol += bin.rate_per_atom * a * bin.energy_ev;
  }
  f_ol *= p.atomic_density();
  if (!any_above && warning)
    *warning = "PKA spectrum lies entirely below the fragmentation energy; overlap rate is 0";
  return f_ol;
}

}  // namespace wcd
