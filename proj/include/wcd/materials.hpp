#pragma once

#include <string>

namespace wcd {

// Coefficients of the loop formation-energy fit
// E_f(n) = a3 + a2*sqrt(n) + a1*ln(n)*sqrt(n), in eV.
struct LoopFitCoeffs {
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
};

struct ArrheniusMobility {
  double d0 = 0.0;  // pre-exponential factor (m^2/s)
  double em = 0.0;  // migration energy (eV)

  double at(double temperature_k) const;
};

// Material constants for tungsten plus the model inputs that are not
// derivable from them (trap inventory, sink geometry, irradiation
// temperature). Lengths in m, energies in eV unless noted.
struct MaterialParams {
  double a0 = 0.316e-9;            // lattice parameter
  double burgers = 0.274e-9;       // Burgers vector magnitude
  double rho_d = 5.0e12;           // dislocation density (1/m^2), 4-6e12 band
  double grain_radius = 1.5e-6;    // from 3 um grain size
  double r_d = 0.65e-9;            // dislocation capture radius
  double bias_z = 1.2;             // dislocation bias, interstitial migrants only
  double r_t_factor = 1.5;         // trap interaction radius in units of b
  double gamma_surface = 3.3;      // void surface energy (J/m^2)
  double ef_sia = 9.46;            // SIA formation energy
  double ef_vacancy = 3.80;        // vacancy formation energy
  LoopFitCoeffs fit_111{3.92996, 7.92419, 6.20090};
  LoopFitCoeffs fit_100{4.84883, 13.6984, -8.2584};

  // Trap model: impurity content in appm plus transmutation-product number
  // density; detrapping is an activated hop at attempt frequency nu_detrap.
  double trap_interstitial_appm = 229.0;
  double trap_transmuted_density = 1.2e20;  // 1/m^3
  double nu_detrap = 1.0e11;                // 1/s
  double e_detrap = 1.0;                    // eV

  // Free-surface sink geometry (only used when surface sinks are enabled).
  double sample_thickness = 4.0e-3;  // m
  double migration_angle = 0.0;      // rad, loop migration direction vs normal

  // Optional 1-D mobility for <100> loops (default immobile). When d0 > 0,
  // <100> loops migrate like 1/2<111> loops with this prefactor rule.
  double loop100_d0 = 0.0;
  double loop100_em = 0.1;

  // When set, trapped-loop trap-mediated diffusivity feeds the 1-D reaction
  // kinetics instead of being a local (detrap-adjacent) diagnostic.
  bool route_trapped_diffusivity_into_1d = false;

  double temperature = 673.15;  // K

  double omega() const { return a0 * a0 * a0 / 2.0; }      // atomic volume
  double atomic_density() const { return 1.0 / omega(); }  // atoms/m^3
  double r_t() const { return r_t_factor * burgers; }      // trap radius
  double trap_interstitial_density() const {
    return trap_interstitial_appm * 1e-6 * atomic_density();
  }

  // Returns an error message for the first violated invariant, empty if valid.
  std::string validate() const;
};

}  // namespace wcd
