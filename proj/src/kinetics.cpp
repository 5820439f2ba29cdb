#include "wcd/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "wcd/constants.hpp"

namespace wcd {

double absorb_3d3d(double d_y, double d_x, double r_y, double r_x) {
  return 4.0 * kPi * (d_y + d_x) * (r_y + r_x);
}

double absorb_loop_3d(double d_y, double d_x, double r_loop, double r_x, double r_d) {
  double rc = r_x + r_d;
  double ratio = r_loop / (3.0 * rc);
  double alpha = 1.0 / (1.0 + ratio * ratio);
  double z_v = 4.0 * kPi * (r_loop + rc);
  double z_l = 4.0 * kPi * kPi * r_loop / std::log(1.0 + 8.0 * r_loop / rc);
  return (d_y + d_x) * ((1.0 - alpha) * z_l + alpha * z_v);
}

double cross_section(double r_y, double r_x, double r_d_if_loop) {
  double r = r_y + r_x + r_d_if_loop;
  return kPi * r * r;
}

double cross_section(const SpeciesKey& y, const SpeciesKey& x, const MaterialParams& p) {
  double r_d = (is_loop(y.family) || is_loop(x.family)) ? p.r_d : 0.0;
  return cross_section(reaction_radius(y, p), reaction_radius(x, p), r_d);
}

double mean_free_path(std::span<const double> sigmas, std::span<const double> concentrations,
                      double sink_inverse_length) {
  double inv = sink_inverse_length;
  for (std::size_t i = 0; i < sigmas.size(); ++i) inv += sigmas[i] * concentrations[i];
  if (inv <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / inv;
}

double react_1d(double d_y, double sigma, double lambda_y) {
  if (!(lambda_y > 0.0) || std::isinf(lambda_y)) return 0.0;
  return 2.0 * d_y * sigma / lambda_y;
}

SinkSet SinkSet::from(const MaterialParams& p, bool surface_on) {
  SinkSet s;
  s.rho_d = p.rho_d;
  s.r_d = p.r_d;
  s.bias_z = p.bias_z;
  s.grain_radius = p.grain_radius;
  s.surface_enabled = surface_on;
  s.thickness = p.sample_thickness;
  s.migration_angle = p.migration_angle;
  return s;
}

SinkStrengths sink_strengths(MobilityClass mobility, double radius, const SinkSet& sinks) {
  SinkStrengths out;
  if (mobility == MobilityClass::Immobile) return out;
  double rc = sinks.r_d + radius;
  if (mobility == MobilityClass::OneD) {
    double inv = kPi * rc * sinks.rho_d;
    out.dislocation = 2.0 * inv * inv;
    out.grain_boundary = 15.0 / (sinks.grain_radius * sinks.grain_radius);
    if (sinks.surface_enabled) {
      double c = std::cos(sinks.migration_angle);
      out.surface = 8.0 * c * c / (sinks.thickness * sinks.thickness);
    }
  } else {
    double rho = rc * std::sqrt(kPi * sinks.rho_d);
    if (rho >= 1.0)
      throw std::domain_error("sink_strengths: dimensionless dislocation density >= 1");
    double rho2 = rho * rho;
    double denom = std::log(1.0 / rho) - 0.75 + 0.25 * rho2 * (4.0 - rho2);
    out.dislocation = 2.0 * kPi * sinks.rho_d * (1.0 - rho2) / denom;
    out.grain_boundary = 14.4 / (sinks.grain_radius * sinks.grain_radius);
    if (sinks.surface_enabled) out.surface = 2.0 / (sinks.thickness * sinks.thickness);
  }
  return out;
}

double sink_inverse_length_1d(double radius, const SinkSet& sinks) {
  SinkStrengths l = sink_strengths(MobilityClass::OneD, radius, sinks);
  double inv = std::sqrt(l.dislocation) + std::sqrt(l.grain_boundary);
  if (sinks.surface_enabled) inv += std::sqrt(l.surface);
  return inv;
}

SpeciesRef make_ref(const SpeciesKey& key) {
  return {key.family, key.trapped, static_cast<double>(key.n)};
}

MobilityClass kinetic_mobility(const SpeciesRef& ref, const MaterialParams& p) {
  switch (ref.family) {
    case DefectFamily::SiaPoint:
    case DefectFamily::VacancyPoint:
      return MobilityClass::ThreeD;
    case DefectFamily::Loop111:
      if (!ref.trapped) return MobilityClass::OneD;
      return p.route_trapped_diffusivity_into_1d ? MobilityClass::OneD
                                                 : MobilityClass::Immobile;
    case DefectFamily::Loop100:
      return p.loop100_d0 > 0.0 ? MobilityClass::OneD : MobilityClass::Immobile;
    default:
      return MobilityClass::Immobile;
  }
}

double kinetic_diffusivity(const SpeciesRef& ref, const MaterialParams& p) {
  if (ref.family == DefectFamily::Loop111 && ref.trapped) {
    if (!p.route_trapped_diffusivity_into_1d) return 0.0;
    double rho_t = p.trap_interstitial_density() + p.trap_transmuted_density;
    return rho_t > 0.0 ? trap_mediated_diffusivity(ref.n, p, rho_t) : 0.0;
  }
  return mobility_law(ref.family, ref.trapped, ref.n, p).at(p.temperature);
}

namespace {

ProductRef cluster_product(DefectFamily family, bool trapped, double n) {
  return {ProductRef::Kind::Cluster, family, trapped, n};
}

bool mobile_1d(const SpeciesRef& r, bool loop100_mobile) {
  if (r.family == DefectFamily::Loop111 && !r.trapped) return true;
  if (r.family == DefectFamily::Loop100 && loop100_mobile) return true;
  return false;
}


// Interstitial cluster merge: the product keeps the absorbing family. Sums
// of point clusters past 3 SIAs nucleate free 1/2<111> loops.
ProductRef merge_interstitial(const SpeciesRef& a, const SpeciesRef& b) {
  double sum = a.n + b.n;
  const SpeciesRef& cluster = (a.family == DefectFamily::SiaPoint) ? b : a;
  if (cluster.family == DefectFamily::SiaPoint) {
    if (sum <= 3.0) return cluster_product(DefectFamily::SiaPoint, false, sum);
    return cluster_product(DefectFamily::Loop111, false, sum);
  }
  return cluster_product(cluster.family, cluster.trapped, sum);
}

}  // namespace

ProductRef resolve_signed_product(double net, const SpeciesRef& interstitial_side,
                                  const SpeciesRef& vacancy_side) {
  if (net == 0.0) return {};
  if (net > 0.0) {
    DefectFamily f = interstitial_side.family;
    if (f == DefectFamily::SiaPoint || net <= 3.0)
      return cluster_product(DefectFamily::SiaPoint, false, net);
    return cluster_product(f, interstitial_side.trapped, net);
  }
  double m = -net;
  if (vacancy_side.family == DefectFamily::VacancyPoint || m <= 4.0)
    return cluster_product(DefectFamily::VacancyPoint, false, m);
  return cluster_product(DefectFamily::Void, false, m);
}

std::optional<PairReaction> classify_pair(const SpeciesRef& a, const SpeciesRef& b,
                                          bool same_entity, const PhysicsToggles& toggles,
                                          bool loop100_mobile) {
  const bool a_trap = is_trap(a.family);
  const bool b_trap = is_trap(b.family);

  // Trap capture: free 1/2<111> loops and mobile vacancies only.
  if (a_trap || b_trap) {
    if (a_trap && b_trap) return std::nullopt;
    if (!toggles.traps) return std::nullopt;
    const SpeciesRef& x = a_trap ? b : a;
    PairReaction rx;
    rx.kind = ChannelKind::Trap;
    if (x.family == DefectFamily::Loop111 && !x.trapped) {
      rx.law = RateLaw::K1d;
      rx.a_1d = !a_trap;
      rx.b_1d = !b_trap;
      rx.branches = {{1.0, cluster_product(DefectFamily::Loop111, true, x.n)}};
      return rx;
    }
    if (x.family == DefectFamily::VacancyPoint) {
      rx.law = RateLaw::K3d3d;
      rx.branches = {{1.0, {ProductRef::Kind::VacancyReservoir, DefectFamily::VacancyPoint,
                            false, x.n}}};
      return rx;
    }
    return std::nullopt;
  }

  const bool a_int = is_interstitial(a.family);
  const bool b_int = is_interstitial(b.family);

  // Opposite type: recombination / shrinkage, product by signed size sum.
  if (a_int != b_int) {
    const SpeciesRef& i = a_int ? a : b;
    const SpeciesRef& v = a_int ? b : a;
    PairReaction rx;
    rx.branches = {{1.0, resolve_signed_product(i.n - v.n, i, v)}};
    if (i.family == DefectFamily::SiaPoint) {
      // 3-D SIA migrants recombine with mobile vacancies and shrink voids.
      rx.law = RateLaw::K3d3d;
      rx.kind = ChannelKind::Absorb3D3D;
      return rx;
    }
    if (v.family == DefectFamily::VacancyPoint) {
      // Only monovacancies react with extended interstitial clusters.
      if (v.n > 1.0) return std::nullopt;
      if (i.family == DefectFamily::C15) {
        rx.law = RateLaw::K3d3d;
        rx.kind = ChannelKind::Absorb3D3D;
      } else {
        rx.law = RateLaw::KLoop3d;
        rx.kind = ChannelKind::AbsorbLoop3D;
        rx.loop_side = a_int ? 0 : 1;
      }
      return rx;
    }
    // Loop + void coalescence through 1-D migration.
    if (v.family == DefectFamily::Void && is_loop(i.family)) {
      bool i_mobile = mobile_1d(i, loop100_mobile);
      if (!i_mobile) return std::nullopt;
      rx.law = RateLaw::K1d;
      rx.kind = ChannelKind::React1D;
      rx.a_1d = a_int ? i_mobile : false;
      rx.b_1d = a_int ? false : i_mobile;
      return rx;
    }
    return std::nullopt;
  }

  // Same-type interstitial pairs.
  if (a_int) {
    const bool a_pt = a.family == DefectFamily::SiaPoint;
    const bool b_pt = b.family == DefectFamily::SiaPoint;
    PairReaction rx;
    if (a_pt && b_pt) {
      rx.law = RateLaw::K3d3d;
      rx.kind = ChannelKind::Absorb3D3D;
      rx.branches = {{1.0, merge_interstitial(a, b)}};
      return rx;
    }
    if (a_pt || b_pt) {
      const SpeciesRef& cluster = a_pt ? b : a;
      if (cluster.family == DefectFamily::C15) {
        rx.law = RateLaw::K3d3d;
        rx.kind = ChannelKind::Absorb3D3D;
      } else {
        rx.law = RateLaw::KLoop3d;
        rx.kind = ChannelKind::AbsorbLoop3D;
        rx.loop_side = a_pt ? 1 : 0;
      }
      rx.branches = {{1.0, merge_interstitial(a, b)}};
      return rx;
    }
    // Loop-loop reactions; C15 clusters take part in none of them.
    if (a.family == DefectFamily::C15 || b.family == DefectFamily::C15) return std::nullopt;
    bool a_mob = mobile_1d(a, loop100_mobile);
    bool b_mob = mobile_1d(b, loop100_mobile);
    if (!a_mob && !b_mob) return std::nullopt;
    rx.law = RateLaw::K1d;
    rx.kind = ChannelKind::React1D;
    rx.a_1d = a_mob;
    rx.b_1d = b_mob;
    double sum = a.n + b.n;
    if (a.family == b.family) {
      if (a.family == DefectFamily::Loop111 && a.trapped != b.trapped) {
        // Free loop coalescing with a pinned one stays at the trap site.
        rx.branches = {{1.0, cluster_product(DefectFamily::Loop111, true, sum)}};
        return rx;
      }
      if (a.family == DefectFamily::Loop111 && same_entity) {
        // Equal-size variant reaction: 3/8 of encounters rotate the pair
        // into a <100> loop when the loop reaction is active.
        if (toggles.loop_reaction) {
          rx.branches = {{3.0 / 8.0, cluster_product(DefectFamily::Loop100, false, sum)},
                         {5.0 / 8.0, cluster_product(DefectFamily::Loop111, false, sum)}};
        } else {
          rx.branches = {{1.0, cluster_product(DefectFamily::Loop111, false, sum)}};
        }
        return rx;
      }
      rx.branches = {{1.0, cluster_product(a.family, false, sum)}};
      return rx;
    }
    // Cross-family (1/2<111> x <100>): exists only with the loop reaction on;
    // the larger loop's Burgers vector wins, an exact tie splits evenly.
    if (!toggles.loop_reaction) return std::nullopt;
    if (a.trapped || b.trapped) {
      // A pinned 1/2<111> loop can still be absorbed by / absorb a mobile
      // <100> loop only under the mobility override; keep the trap site.
      const SpeciesRef& tr = a.trapped ? a : b;
      const SpeciesRef& other = a.trapped ? b : a;
      if (!mobile_1d(other, loop100_mobile)) return std::nullopt;
      if (tr.n >= other.n)
        rx.branches = {{1.0, cluster_product(DefectFamily::Loop111, true, sum)}};
      else
        rx.branches = {{1.0, cluster_product(other.family, false, sum)}};
      return rx;
    }
    if (a.n > b.n)
      rx.branches = {{1.0, cluster_product(a.family, false, sum)}};
    else if (b.n > a.n)
      rx.branches = {{1.0, cluster_product(b.family, false, sum)}};
    else
      rx.branches = {{0.5, cluster_product(a.family, false, sum)},
                     {0.5, cluster_product(b.family, false, sum)}};
    return rx;
  }

  // Same-type vacancy pairs.
  {
    PairReaction rx;
    rx.law = RateLaw::K3d3d;
    rx.kind = ChannelKind::Absorb3D3D;
    double sum = a.n + b.n;
    const bool a_pt = a.family == DefectFamily::VacancyPoint;
    const bool b_pt = b.family == DefectFamily::VacancyPoint;
    if (a_pt && b_pt) {
      // Mobile vacancy clusters grow only through the monomer channel.
      if (std::min(a.n, b.n) > 1.0) return std::nullopt;
      DefectFamily f = sum <= 4.0 ? DefectFamily::VacancyPoint : DefectFamily::Void;
      rx.branches = {{1.0, cluster_product(f, false, sum)}};
      return rx;
    }
    if (a_pt || b_pt) {
      rx.branches = {{1.0, cluster_product(DefectFamily::Void, false, sum)}};
      return rx;
    }
    return std::nullopt;  // two immobile voids
  }
}

double pair_rate_coefficient(const PairReaction& rx, const SpeciesRef& a, const SpeciesRef& b,
                             const MaterialParams& p) {
  double r_a = reaction_radius(a.family, a.n, p);
  double r_b = reaction_radius(b.family, b.n, p);
  double d_a = kinetic_diffusivity(a, p);
  double d_b = kinetic_diffusivity(b, p);
  switch (rx.law) {
    case RateLaw::K3d3d:
      return absorb_3d3d(d_a, d_b, r_a, r_b);
    case RateLaw::KLoop3d: {
      bool a_is_loop = rx.loop_side == 0;
      double r_loop = a_is_loop ? r_a : r_b;
      double r_x = a_is_loop ? r_b : r_a;
      return absorb_loop_3d(d_a, d_b, r_loop, r_x, p.r_d);
    }
    case RateLaw::K1d: {
      double r_d = (is_loop(a.family) || is_loop(b.family)) ? p.r_d : 0.0;
      return cross_section(r_a, r_b, r_d);
    }
  }
  return 0.0;
}

std::optional<SpeciesRef> emission_remainder(const SpeciesRef& y) {
  switch (y.family) {
    case DefectFamily::SiaPoint:
      if (y.n < 2.0) return std::nullopt;
      return SpeciesRef{DefectFamily::SiaPoint, false, y.n - 1.0};
    case DefectFamily::Loop111:
    case DefectFamily::Loop100:
      if (y.n - 1.0 < 4.0) return SpeciesRef{DefectFamily::SiaPoint, false, y.n - 1.0};
      return SpeciesRef{y.family, y.trapped, y.n - 1.0};
    case DefectFamily::VacancyPoint:
      if (y.n < 2.0) return std::nullopt;
      return SpeciesRef{DefectFamily::VacancyPoint, false, y.n - 1.0};
    case DefectFamily::Void:
      if (y.n - 1.0 < 5.0) return SpeciesRef{DefectFamily::VacancyPoint, false, y.n - 1.0};
      return SpeciesRef{DefectFamily::Void, false, y.n - 1.0};
    default:
      return std::nullopt;  // C15 clusters are stable; traps do not emit
  }
}

double emission_rate(const SpeciesRef& y, const MaterialParams& p,
                     const PhysicsToggles& toggles) {
  auto rem = emission_remainder(y);
  if (!rem) return 0.0;
  const bool sia_side = is_interstitial(y.family);
  SpeciesRef monomer{sia_side ? DefectFamily::SiaPoint : DefectFamily::VacancyPoint, false, 1.0};

  double e_b;
  if (sia_side) {
    DefectFamily fit = (y.family == DefectFamily::Loop100) ? DefectFamily::Loop100
                                                           : DefectFamily::Loop111;
    e_b = binding_energy(BindingChannel::SiaFromSiaCluster, fit, y.n, p);
  } else {
    e_b = binding_energy(BindingChannel::VacancyFromVoid, DefectFamily::Void, y.n, p);
  }

  auto rx = classify_pair(*rem, monomer, false, toggles, p.loop100_d0 > 0.0);
  if (!rx) return 0.0;
  double k = pair_rate_coefficient(*rx, *rem, monomer, p);
  return k / p.omega() * std::exp(-e_b / (kBoltzmannEv * p.temperature));
}

std::vector<ReactionChannel> build_channels(const SpeciesSet& species, const MaterialParams& p,
                                            const PhysicsToggles& toggles) {
  std::vector<ReactionChannel> channels;
  const bool loop100_mobile = p.loop100_d0 > 0.0;
  const int n = species.size();

  auto product_index = [&](const ProductRef& prod, bool& clamped) -> int {
    clamped = false;
    if (prod.kind != ProductRef::Kind::Cluster) return -1;
    int size = static_cast<int>(std::llround(prod.n));
    SpeciesKey key{prod.family, size, prod.trapped};
    if (auto idx = species.try_index(key)) return *idx;
    // Past the axis cap: the terminal bin absorbs the flux.
    int cap = is_interstitial(prod.family) ? species.n_max_interstitial()
                                           : species.n_max_vacancy();
    if (size > cap) {
      clamped = true;
      return species.index({prod.family, cap, prod.trapped});
    }
    throw std::logic_error("build_channels: unresolvable product " + to_string(key));
  };

  for (int i = 0; i < n; ++i) {
    SpeciesKey key_i = species.key(i);
    SpeciesRef ref_i = make_ref(key_i);
    for (int j = i; j < n; ++j) {
      SpeciesKey key_j = species.key(j);
      SpeciesRef ref_j = make_ref(key_j);
      auto rx = classify_pair(ref_i, ref_j, i == j, toggles, loop100_mobile);
      if (!rx) continue;
      double coeff = pair_rate_coefficient(*rx, ref_i, ref_j, p);
      for (const auto& branch : rx->branches) {
        ReactionChannel ch;
        ch.kind = rx->kind;
        ch.law = rx->law;
        ch.a = i;
        ch.b = j;
        ch.weight = branch.weight;
        ch.a_1d = rx->a_1d;
        ch.b_1d = rx->b_1d;
        ch.product = product_index(branch.product, ch.clamped);
        ch.to_vacancy_reservoir = branch.product.kind == ProductRef::Kind::VacancyReservoir;
        if (rx->law == RateLaw::K1d)
          ch.sigma = coeff;
        else
          ch.k = coeff;
        channels.push_back(ch);
      }
    }
  }

  // Emission, sink losses and detrapping.
  SinkSet sinks = SinkSet::from(p, toggles.surface_sinks);
  for (int i = 0; i < n; ++i) {
    SpeciesKey key = species.key(i);
    SpeciesRef ref = make_ref(key);

    double g = emission_rate(ref, p, toggles);
    if (g > 0.0) {
      auto rem = emission_remainder(ref);
      ReactionChannel ch;
      ch.kind = ChannelKind::Emit;
      ch.a = i;
      ch.k = g;
      ch.product = species.index(
          {rem->family, static_cast<int>(std::llround(rem->n)), rem->trapped});
      bool sia_side = is_interstitial(key.family);
      ch.emitted = species.index(
          {sia_side ? DefectFamily::SiaPoint : DefectFamily::VacancyPoint, 1, false});
      channels.push_back(ch);
    }

    MobilityClass mob = kinetic_mobility(ref, p);
    double d = kinetic_diffusivity(ref, p);
    if (mob != MobilityClass::Immobile && d > 0.0) {
      SinkStrengths l = sink_strengths(mob, reaction_radius(key, p), sinks);
      double z = is_interstitial(key.family) ? sinks.bias_z : 1.0;
      ReactionChannel ch;
      ch.kind = ChannelKind::SinkLoss;
      ch.a = i;
      ch.k = d * l.total(z);
      channels.push_back(ch);
    }

    if (key.family == DefectFamily::Loop111 && key.trapped && toggles.traps) {
      ReactionChannel ch;
      ch.kind = ChannelKind::Detrap;
      ch.a = i;
      ch.k = p.nu_detrap * std::exp(-p.e_detrap / (kBoltzmannEv * p.temperature));
      ch.product = species.index({DefectFamily::Loop111, key.n, false});
      channels.push_back(ch);
    }
  }

  return channels;
}

}  // namespace wcd
