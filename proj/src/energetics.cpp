#include "wcd/energetics.hpp"

#include <cmath>
#include <stdexcept>

#include "wcd/constants.hpp"

namespace wcd {

double ArrheniusMobility::at(double temperature_k) const {
  if (d0 == 0.0) return 0.0;
  return d0 * std::exp(-em / (kBoltzmannEv * temperature_k));
}

std::string MaterialParams::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(a0)) return "a0 must be > 0";
  if (!positive(burgers)) return "burgers must be > 0";
  if (!positive(rho_d)) return "rho_d must be > 0";
  if (!positive(grain_radius)) return "grain_radius must be > 0";
  if (!positive(r_d)) return "r_d must be > 0";
  if (!(bias_z > 0.0)) return "bias_z must be > 0";
  if (!positive(r_t_factor)) return "r_t_factor must be > 0";
  if (!positive(gamma_surface)) return "gamma_surface must be > 0";
  if (!positive(temperature)) return "temperature must be > 0";
  if (!positive(sample_thickness)) return "sample_thickness must be > 0";
  if (trap_interstitial_appm < 0.0) return "trap_interstitial_appm must be >= 0";
  if (trap_transmuted_density < 0.0) return "trap_transmuted_density must be >= 0";
  if (!positive(nu_detrap)) return "nu_detrap must be > 0";
  if (e_detrap < 0.0) return "e_detrap must be >= 0";
  if (loop100_d0 < 0.0) return "loop100_d0 must be >= 0";
  return {};
}

namespace {

// Table of 3-D migrant mobilities.
constexpr double kD0I1 = 9.981e-11, kEmI1 = 0.165;
constexpr double kD0I2 = 8.648e-10, kEmI2 = 0.222;
constexpr double kD0I3 = 3.47e-11, kEmI3 = 0.203;
constexpr double kD0V1 = 1.77e-6, kEmV = 1.66;
constexpr double kEmLoop = 0.1;

}  // namespace

ArrheniusMobility mobility_law(DefectFamily family, bool trapped, double n,
                               const MaterialParams& p) {
  switch (family) {
    case DefectFamily::SiaPoint:
      if (n <= 1.0) return {kD0I1, kEmI1};
      if (n <= 2.0) return {kD0I2, kEmI2};
      return {kD0I3, kEmI3};
    case DefectFamily::VacancyPoint:
      return {kD0V1 / n, kEmV};
    case DefectFamily::Loop111:
      if (trapped) return {0.0, 0.0};
      return {kD0I1 / std::sqrt(n), kEmLoop};
    case DefectFamily::Loop100:
      if (p.loop100_d0 > 0.0) return {p.loop100_d0 / std::sqrt(n), p.loop100_em};
      return {0.0, 0.0};
    default:
      return {0.0, 0.0};
  }
}

ArrheniusMobility mobility_law(const SpeciesKey& key, const MaterialParams& p) {
  return mobility_law(key.family, key.trapped, static_cast<double>(key.n), p);
}

double diffusivity(DefectFamily family, bool trapped, double n, const MaterialParams& p) {
  if (family == DefectFamily::Loop111 && trapped) {
    double rho_t = p.trap_interstitial_density() + p.trap_transmuted_density;
    if (rho_t <= 0.0) return 0.0;
    return trap_mediated_diffusivity(n, p, rho_t);
  }
  return mobility_law(family, trapped, n, p).at(p.temperature);
}

double diffusivity(const SpeciesKey& key, const MaterialParams& p) {
  return diffusivity(key.family, key.trapped, static_cast<double>(key.n), p);
}

double trap_mediated_diffusivity(double loop_n, const MaterialParams& p, double rho_t) {
  if (rho_t <= 0.0)
    throw std::domain_error("trap_mediated_diffusivity: trapped species with zero traps");
  double r_i = reaction_radius(DefectFamily::Loop111, loop_n, p);
  double lambda = 1.0 / (4.0 * kPi * r_i * p.r_t() * rho_t);
  // One-dimensional hop (N = 1) at the activated attempt frequency.
  double hop_rate = p.nu_detrap * std::exp(-p.e_detrap / (kBoltzmannEv * p.temperature));
  return hop_rate * lambda * lambda / 2.0;
}

double trap_mediated_diffusivity(const SpeciesKey& loop_key, const MaterialParams& p,
                                 double rho_t) {
  if (loop_key.family != DefectFamily::Loop111 || !loop_key.trapped)
    throw std::domain_error("trap_mediated_diffusivity: key must be a trapped 1/2<111> loop");
  return trap_mediated_diffusivity(static_cast<double>(loop_key.n), p, rho_t);
}

double formation_energy_loop(DefectFamily family, double n, const MaterialParams& p) {
  if (n < 1.0) throw std::domain_error("formation_energy_loop: n must be >= 1");
  const LoopFitCoeffs* c = nullptr;
  switch (family) {
    case DefectFamily::SiaPoint:
    case DefectFamily::Loop111:
      c = &p.fit_111;
      break;
    case DefectFamily::Loop100:
      c = &p.fit_100;
      break;
    default:
      throw std::domain_error("formation_energy_loop: no fit for this family");
  }
  double sq = std::sqrt(n);
  return c->a3 + c->a2 * sq + c->a1 * std::log(n) * sq;
}

double formation_energy_void(double n, const MaterialParams& p) {
  if (n < 1.0) throw std::domain_error("formation_energy_void: n must be >= 1");
  double r = std::cbrt(3.0 * n * p.omega() / (4.0 * kPi));
  return 4.0 * kPi * r * r * p.gamma_surface / kEvToJoule;
}

double binding_energy(BindingChannel channel, DefectFamily family, double n,
                      const MaterialParams& p) {
  auto ef_cluster = [&](double m) {
    switch (channel) {
      case BindingChannel::SiaFromSiaCluster:
      case BindingChannel::VacancyToSiaCluster:
        return formation_energy_loop(family, m, p);
      default:
        return formation_energy_void(m, p);
    }
  };
  switch (channel) {
    case BindingChannel::SiaFromSiaCluster:
      if (n < 2.0) throw std::domain_error("binding_energy: SIA emission needs n >= 2");
      return p.ef_sia + ef_cluster(n - 1.0) - ef_cluster(n);
    case BindingChannel::VacancyFromVoid:
      if (n < 2.0) throw std::domain_error("binding_energy: vacancy emission needs n >= 2");
      return p.ef_vacancy + ef_cluster(n - 1.0) - ef_cluster(n);
    case BindingChannel::SiaToVoid:
      return p.ef_sia + ef_cluster(n + 1.0) - ef_cluster(n);
    case BindingChannel::VacancyToSiaCluster:
      return p.ef_vacancy + ef_cluster(n + 1.0) - ef_cluster(n);
  }
  throw std::domain_error("binding_energy: unknown channel");
}

double reaction_radius(DefectFamily family, double n, const MaterialParams& p) {
  if (n < 1.0) throw std::domain_error("reaction_radius: n must be >= 1");
  if (is_trap(family)) return p.r_t();
  if (is_loop(family)) return std::sqrt(n * p.omega() / (kPi * p.burgers));
  return std::cbrt(3.0 * n * p.omega() / (4.0 * kPi));
}

double reaction_radius(const SpeciesKey& key, const MaterialParams& p) {
  return reaction_radius(key.family, static_cast<double>(key.n), p);
}

double diameter_nm(DefectFamily family, double n, const MaterialParams& p) {
  return 2.0e9 * reaction_radius(family, n, p);
}

double size_from_diameter_nm(DefectFamily family, double d_nm, const MaterialParams& p) {
  double r = d_nm * 0.5e-9;
  if (is_loop(family)) return kPi * r * r * p.burgers / p.omega();
  return 4.0 * kPi * r * r * r / (3.0 * p.omega());
}

double d_reaction_radius_dn(DefectFamily family, double n, const MaterialParams& p) {
  if (is_trap(family)) return 0.0;
  double r = reaction_radius(family, n, p);
  return is_loop(family) ? r / (2.0 * n) : r / (3.0 * n);
}

double d_formation_energy_loop_dn(DefectFamily family, double n, const MaterialParams& p) {
  const LoopFitCoeffs& c = (family == DefectFamily::Loop100) ? p.fit_100 : p.fit_111;
  double sq = std::sqrt(n);
  return c.a2 / (2.0 * sq) + c.a1 * (std::log(n) / (2.0 * sq) + 1.0 / sq);
}

double d_formation_energy_void_dn(double n, const MaterialParams& p) {
  return 2.0 / 3.0 * formation_energy_void(n, p) / n;
}

double d_diffusivity_dn(DefectFamily family, bool trapped, double n, double diffusivity_value,
                        const MaterialParams& p) {
  if (diffusivity_value == 0.0) return 0.0;
  switch (family) {
    case DefectFamily::Loop111:
      if (trapped) {
        // trap-mediated D ~ lambda^2 ~ r^-2, disc radius ~ sqrt(n)
        return p.route_trapped_diffusivity_into_1d ? -diffusivity_value / n : 0.0;
      }
      return -diffusivity_value / (2.0 * n);
    case DefectFamily::Loop100:
      return -diffusivity_value / (2.0 * n);
    case DefectFamily::VacancyPoint:
      return -diffusivity_value / n;
    default:
      return 0.0;  // tabulated point-defect values, no size axis
  }
}

}  // namespace wcd
