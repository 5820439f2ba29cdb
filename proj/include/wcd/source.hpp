#pragma once

#include <string>
#include <vector>

#include "wcd/materials.hpp"
#include "wcd/species.hpp"

namespace wcd {

// In-cascade defect production: a power law G(n) = A / n^S per size with the
// prefactor normalized so that sum n G(n) equals the total production rate.
// Interstitial clusters of 4+ SIAs split 5% C15 / 1% <100> / 94% 1/2<111>.
struct ProductionSpec {
  double s_interstitial = 2.20;
  double s_vacancy = 1.63;
  int n_max_interstitial = 15;
  int n_max_vacancy = 20;
  double f_c15 = 0.05;
  double f_loop100 = 0.01;
  double defect_fraction = 0.0;  // production feedback, zero under uniform dpa rate

  double f_loop111() const { return 1.0 - f_c15 - f_loop100; }
  std::string validate() const;
};

enum class ProductionAxis { Interstitial, Vacancy };

// Power-law normalization sum_{n=1..N} n^(1-S).
double production_norm(double s, int n_max);

// Production rate density for size n on one axis, defects of that size per
// m^3 per second (before the family partition). Out-of-range sizes give 0.
double production_rate(int n, ProductionAxis axis, const ProductionSpec& spec,
                       double total_rate);

// Uniform dpa rate converted to a defect production rate (defects/m^3/s).
double dpa_to_rate(double dose_dpa, double duration_s, const MaterialParams& p);

// Per-species production vector over an exact species set (defects/m^3/s).
std::vector<double> production_vector(const SpeciesSet& species, const ProductionSpec& spec,
                                      double total_rate);

// Full cascade overlap: per unit time a fraction of same-size loops flips
// Burgers vector and a fraction of voids is re-dissolved into mobile
// vacancies. Rate constants are probabilities per overlap event times the
// average overlap rate f_ol.
struct OverlapSpec {
  double f_ol = 5.0e-7;        // 1/s
  double f_111_to_100 = 0.05;  // multiplies C_100(n) in dC_111(n)/dt
  double f_100_to_111 = 0.20;  // multiplies C_111(n) in dC_111(n)/dt (loss)
  double f_void = 0.10;        // void dissolution fraction per event

  // Per-size hooks; the baseline tables are size independent.
  double f_111_to_100_at(double /*n*/) const { return f_111_to_100; }
  double f_100_to_111_at(double /*n*/) const { return f_100_to_111; }
  double f_void_at(double /*n*/) const { return f_void; }

  std::string validate() const;
};

// PKA spectrum: differential PKA rates per atom against PKA energy, with the
// molten-volume scaling of full overlap above the fragmentation energy.
struct PkaSpectrum {
  struct Bin {
    double energy_ev = 0.0;
    double rate_per_atom = 0.0;  // PKAs per atom per second in this bin
  };
  std::vector<Bin> bins;                 // ascending in energy
  double e_fragment_ev = 160.0e3;        // cascade fragmentation threshold
  double v_fragment_m3 = 1.0e-24;        // molten volume at the threshold (1e6 A^3)

  // Two-column text (energy_eV, rate_per_atom_per_s), '#' comments.
  static PkaSpectrum load(const std::string& path);
  std::string validate() const;
};

// Average full-overlap rate: site probability per unit time of being caught
// inside a molten domain, F_ol = rho_at * sum_{E >= E_fr} rate(E) V_mol(E)
// with V_mol = (V_fr / E_fr) E. Bins below the threshold do not overlap;
// `warning` is set when the whole spectrum lies below it.
double estimate_overlap_rate(const PkaSpectrum& spectrum, const MaterialParams& p,
                             std::string* warning = nullptr);

}  // namespace wcd
