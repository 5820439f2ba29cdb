#pragma once

#include "wcd/materials.hpp"
#include "wcd/species.hpp"

namespace wcd {

// Mobility law for a species: Table-driven Arrhenius parameters. Immobile
// species get d0 = 0. Free 1/2<111> loops follow D0(I1)/n^0.5 with a 0.1 eV
// migration energy; V2..V4 follow D0(V1)/n at the monovacancy energy.
// Real-valued sizes are accepted so group representatives can be evaluated.
ArrheniusMobility mobility_law(DefectFamily family, bool trapped, double n,
                               const MaterialParams& p);
ArrheniusMobility mobility_law(const SpeciesKey& key, const MaterialParams& p);

// Diffusion coefficient at the parameter-set temperature. Trapped 1/2<111>
// loops return the trap-mediated value; immobile species return 0.
double diffusivity(DefectFamily family, bool trapped, double n, const MaterialParams& p);
double diffusivity(const SpeciesKey& key, const MaterialParams& p);

// Trap-mediated diffusivity of a trapped 1/2<111> loop: hop length
// lambda = (4 pi r_loop r_t rho_t)^-1 between trap sites, 1-D hops,
// D = nu_detrap * lambda^2 / 2 * exp(-e_detrap/kT).
// Throws std::domain_error when rho_t <= 0 (a trapped population cannot
// exist without traps).
double trap_mediated_diffusivity(double loop_n, const MaterialParams& p, double rho_t);
double trap_mediated_diffusivity(const SpeciesKey& loop_key, const MaterialParams& p,
                                 double rho_t);

// Loop formation-energy fit, valid for Loop111/Loop100 (SiaPoint sizes use
// the 1/2<111> coefficients: di-/tri-SIA clusters are nascent <111>
// clusters). Throws std::domain_error for n < 1.
double formation_energy_loop(DefectFamily family, double n, const MaterialParams& p);

// Void formation energy 4 pi r^2 gamma with (4/3) pi r^3 = n a0^3 / 2.
// Throws std::domain_error for n < 1.
double formation_energy_void(double n, const MaterialParams& p);

// Binding-energy channels. The monomer formation energies (9.46 eV SIA,
// 3.80 eV vacancy) enter only as the leading term; the cluster formation
// energies come from the loop fit or the void surface formula.
enum class BindingChannel {
  SiaFromSiaCluster,    // E_b = Ef_SIA + Ef(n-1) - Ef(n), SIA-cluster axis
  VacancyFromVoid,      // E_b = Ef_V + Ef(n-1) - Ef(n), void axis
  SiaToVoid,            // E_b = Ef_SIA + Ef(n+1) - Ef(n), void axis (diagnostic)
  VacancyToSiaCluster,  // E_b = Ef_V + Ef(n+1) - Ef(n), SIA-cluster axis (diagnostic)
};

// family selects the loop fit for the SIA-cluster channels (Loop111, Loop100,
// or SiaPoint which maps to the 1/2<111> fit); it is ignored for the void
// channels. Throws std::domain_error when the size stencil leaves n >= 1.
double binding_energy(BindingChannel channel, DefectFamily family, double n,
                      const MaterialParams& p);

// Reaction radius: spheres for point defects, voids and C15 clusters
// ((4/3) pi r^3 = n Omega), discs for loops (pi r^2 b = n Omega).
double reaction_radius(const SpeciesKey& key, const MaterialParams& p);
double reaction_radius(DefectFamily family, double n, const MaterialParams& p);

// Size <-> diameter maps used for histogram binning (strictly monotonic).
double diameter_nm(DefectFamily family, double n, const MaterialParams& p);
double size_from_diameter_nm(DefectFamily family, double d_nm, const MaterialParams& p);

// Size derivatives feeding the analytical Jacobian chain terms.
double d_reaction_radius_dn(DefectFamily family, double n, const MaterialParams& p);
double d_formation_energy_loop_dn(DefectFamily family, double n, const MaterialParams& p);
double d_formation_energy_void_dn(double n, const MaterialParams& p);
// d(kinetic diffusivity)/dn along a size axis (0 for tabulated point defects).
double d_diffusivity_dn(DefectFamily family, bool trapped, double n, double diffusivity_value,
                        const MaterialParams& p);

}  // namespace wcd
