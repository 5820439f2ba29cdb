#include "wcd/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wcd/constants.hpp"
#include "assembly_internal.hpp"

namespace wcd {

namespace {

// Absorbing terminal bins may legitimately hold means past their upper edge;
// cap the representative size so noise cannot produce absurd geometry.
constexpr double kTerminalRepFactor = 10.0;

struct SideVals {
  double d = 0.0;   // kinetic diffusivity
  double dd = 0.0;  // d(diffusivity)/dn
  double r = 0.0;   // reaction radius
  double dr = 0.0;  // d(radius)/dn
};

double k3d3d_grad(const SideVals& a, const SideVals& b, double& dka, double& dkb) {
  double s = a.d + b.d;
  double rr = a.r + b.r;
  dka = 4.0 * kPi * (a.dd * rr + s * a.dr);
  dkb = 4.0 * kPi * (b.dd * rr + s * b.dr);
  return 4.0 * kPi * s * rr;
}

// Gradient of the toroidal absorption coefficient with respect to the loop
// size and the 3-D migrant size.
double kloop3d_grad(const SideVals& loop, const SideVals& x, double r_d, double& dk_loop,
                    double& dk_x) {
  double rc = x.r + r_d;
  double u = loop.r / (3.0 * rc);
  double alpha = 1.0 / (1.0 + u * u);
  double z_v = 4.0 * kPi * (loop.r + rc);
  double lnarg = 1.0 + 8.0 * loop.r / rc;
  double ln = std::log(lnarg);
  double z_l = 4.0 * kPi * kPi * loop.r / ln;
  double s = loop.d + x.d;
  double geom = (1.0 - alpha) * z_l + alpha * z_v;

  double dalpha_du = -2.0 * u * alpha * alpha;
  double du_dry = 1.0 / (3.0 * rc);
  double du_drc = -u / rc;
  double dzv = 4.0 * kPi;  // both d/dry and d/drc
  double dzl_dry = 4.0 * kPi * kPi / ln - 4.0 * kPi * kPi * loop.r * (8.0 / rc) / (lnarg * ln * ln);
  double dzl_drc =
      4.0 * kPi * kPi * loop.r * (8.0 * loop.r / (rc * rc)) / (lnarg * ln * ln);

  double dgeom_dry = dalpha_du * du_dry * (z_v - z_l) + (1.0 - alpha) * dzl_dry + alpha * dzv;
  double dgeom_drc = dalpha_du * du_drc * (z_v - z_l) + (1.0 - alpha) * dzl_drc + alpha * dzv;

  dk_loop = loop.dd * geom + s * dgeom_dry * loop.dr;
  dk_x = x.dd * geom + s * dgeom_drc * x.dr;
  return s * geom;
}

}  // namespace

std::string SystemConfig::validate() const {
  if (n_max_interstitial < 5 || n_max_vacancy < 5) return "size caps must be >= 5";
  if (dose_rate_dpa_s < 0.0) return "dose rate must be >= 0";
  if (group_floor < 0.0) return "group_floor must be >= 0";
  std::string err = scheme.validate();
  if (!err.empty()) return err;
  err = production.validate();
  if (!err.empty()) return err;
  err = overlap.validate();
  if (!err.empty()) return err;
  int needed = std::max(production.n_max_interstitial, production.n_max_vacancy);
  if (scheme.n_exact < needed)
    return "grouping n_exact must cover the production size range (" +
           std::to_string(needed) + ")";
  if (production.n_max_interstitial > n_max_interstitial ||
      production.n_max_vacancy > n_max_vacancy)
    return "production sizes exceed the axis caps";
  return {};
}

double MassReport::closure_error_interstitial() const {
  double rhs = in_state_interstitial + sinks_interstitial + recombined;
  double scale = std::max(produced_interstitial, 1.0);
  return std::abs(produced_interstitial - rhs) / scale;
}

double MassReport::closure_error_vacancy() const {
  double rhs = in_state_vacancy + sinks_vacancy + recombined;
  double scale = std::max(produced_vacancy, 1.0);
  return std::abs(produced_vacancy - rhs) / scale;
}

// --- construction -----------------------------------------------------------

System::~System() = default;
System::System(System&&) noexcept = default;
System& System::operator=(System&&) noexcept = default;

System::System(const MaterialParams& params, const SystemConfig& config)
    : params_(params), cfg_(config) {
  std::string err = params_.validate();
  if (!err.empty()) throw std::invalid_argument("MaterialParams: " + err);
  err = cfg_.validate();
  if (!err.empty()) throw std::invalid_argument("SystemConfig: " + err);
  sinks_ = SinkSet::from(params_, cfg_.toggles.surface_sinks);

  build_axes();
  build_channels();
  build_overlap_maps();

  // production source over exact bins
  production_ = Eigen::VectorXd::Zero(n_unknowns_);
  double total_rate = cfg_.dose_rate_dpa_s * params_.atomic_density();
  produced_rate_per_side_ = total_rate * (1.0 - cfg_.production.defect_fraction);
  for (int n = 1; n <= cfg_.production.n_max_interstitial; ++n) {
    double gn = production_rate(n, ProductionAxis::Interstitial, cfg_.production, total_rate);
    if (n <= 3) {
      production_[nodes_[node_of(DefectFamily::SiaPoint, false, n)].u] += gn;
    } else {
      production_[nodes_[node_of(DefectFamily::Loop111, false, n)].u] +=
          cfg_.production.f_loop111() * gn;
      production_[nodes_[node_of(DefectFamily::C15, false, n)].u] += cfg_.production.f_c15 * gn;
      production_[nodes_[node_of(DefectFamily::Loop100, false, n)].u] +=
          cfg_.production.f_loop100 * gn;
    }
  }
  for (int n = 1; n <= cfg_.production.n_max_vacancy; ++n) {
    double gn = production_rate(n, ProductionAxis::Vacancy, cfg_.production, total_rate);
    if (n <= 4)
      production_[nodes_[node_of(DefectFamily::VacancyPoint, false, n)].u] += gn;
    else
      production_[nodes_[node_of(DefectFamily::Void, false, n)].u] += gn;
  }

  // scratch
  int nn = static_cast<int>(nodes_.size());
  ns_count_.resize(nn);
  ns_creg_.resize(nn);
  ns_mass_.resize(nn);
  ns_rep_.resize(nn);
  ns_radius_.resize(nn);
  ns_diff_.resize(nn);
  ns_ddiff_dn_.resize(nn);
  ns_drad_dn_.resize(nn);
  lambda_inv_.resize(mover_nodes_.size());
  dlambda_dn_.resize(mover_nodes_.size());
  pair_sigma_.resize(k1d_pairs_.size());
  pair_dsig_da_.resize(k1d_pairs_.size());
  pair_dsig_db_.resize(k1d_pairs_.size());
}

void System::build_axes() {
  nodes_.clear();
  axes_.clear();
  int u = 0;

  auto push_exact_axis = [&](DefectFamily family, int lo, int hi) {
    Axis ax{family, false, {}, {}};
    for (int n = lo; n <= hi; ++n) {
      Node node{family, false, n, n, false, false, u};
      ax.node_ids.push_back(static_cast<int>(nodes_.size()));
      ax.lows.push_back(n);
      nodes_.push_back(node);
      u += 1;
    }
    axes_.push_back(std::move(ax));
  };

  auto push_grouped_axis = [&](DefectFamily family, bool trapped, int min_size, int n_max) {
    Axis ax{family, trapped, {}, {}};
    auto bins = cfg_.scheme.bins(min_size, n_max);
    for (std::size_t i = 0; i < bins.size(); ++i) {
      auto [lo, hi] = bins[i];
      bool terminal = (i + 1 == bins.size());
      bool grouped = terminal || hi > lo;
      Node node{family, trapped, lo, hi, grouped, terminal, u};
      ax.node_ids.push_back(static_cast<int>(nodes_.size()));
      ax.lows.push_back(lo);
      nodes_.push_back(node);
      u += grouped ? 2 : 1;
    }
    axes_.push_back(std::move(ax));
  };

  push_exact_axis(DefectFamily::SiaPoint, 1, 3);
  push_exact_axis(DefectFamily::VacancyPoint, 1, 4);

  trap_node_i_ = static_cast<int>(nodes_.size());
  nodes_.push_back({DefectFamily::TrapInterstitial, false, 1, 1, false, false, u++});
  trap_node_t_ = static_cast<int>(nodes_.size());
  nodes_.push_back({DefectFamily::TrapTransmuted, false, 1, 1, false, false, u++});

  push_grouped_axis(DefectFamily::Loop111, false, 4, cfg_.n_max_interstitial);
  push_grouped_axis(DefectFamily::Loop111, true, 4, cfg_.n_max_interstitial);
  push_grouped_axis(DefectFamily::Loop100, false, 4, cfg_.n_max_interstitial);
  push_grouped_axis(DefectFamily::C15, false, 4, cfg_.n_max_interstitial);
  push_grouped_axis(DefectFamily::Void, false, 5, cfg_.n_max_vacancy);

  reservoir_u0_ = u;
  u += 4;
  ledger_u0_ = u;
  u += static_cast<int>(LedgerSlot::Count);
  n_unknowns_ = u;

  v1_unknown_ = nodes_[node_of(DefectFamily::VacancyPoint, false, 1)].u;
}

int System::axis_index(DefectFamily family, bool trapped) const {
  for (std::size_t i = 0; i < axes_.size(); ++i)
    if (axes_[i].family == family && axes_[i].trapped == trapped) return static_cast<int>(i);
  throw std::logic_error("axis_index: no axis for family");
}

int System::node_of(DefectFamily family, bool trapped, double n) const {
  if (family == DefectFamily::TrapInterstitial) return trap_node_i_;
  if (family == DefectFamily::TrapTransmuted) return trap_node_t_;
  const Axis& ax = axes_[axis_index(family, trapped)];
  auto it = std::upper_bound(ax.lows.begin(), ax.lows.end(), static_cast<int>(std::floor(n)));
  int pos = static_cast<int>(it - ax.lows.begin()) - 1;
  pos = std::clamp(pos, 0, static_cast<int>(ax.node_ids.size()) - 1);
  return ax.node_ids[pos];
}

int System::reservoir_unknown(int n_vacancies) const {
  if (n_vacancies < 1 || n_vacancies > 4)
    throw std::out_of_range("reservoir_unknown: n must be 1..4");
  return reservoir_u0_ + n_vacancies - 1;
}

int System::ledger_unknown(LedgerSlot slot) const {
  return ledger_u0_ + static_cast<int>(slot);
}

void System::build_channels() {
  channels_.clear();
  k1d_pairs_.clear();
  mover_nodes_.clear();
  mover_slot_.assign(nodes_.size(), -1);

  const bool loop100_mobile = params_.loop100_d0 > 0.0;
  const int nn = static_cast<int>(nodes_.size());

  for (int i = 0; i < nn; ++i) {
    SpeciesRef ref{nodes_[i].family, nodes_[i].trapped, static_cast<double>(nodes_[i].lo)};
    if (kinetic_mobility(ref, params_) == MobilityClass::OneD) {
      mover_slot_[i] = static_cast<int>(mover_nodes_.size());
      mover_nodes_.push_back(i);
    }
  }
  mover_pairs_.assign(mover_nodes_.size(), {});

  auto node_ref = [&](int i) {
    // classification uses the lower edge; sizes are refreshed at evaluation
    return SpeciesRef{nodes_[i].family, nodes_[i].trapped,
                      0.5 * (nodes_[i].lo + nodes_[i].hi)};
  };

  for (int i = 0; i < nn; ++i) {
    SpeciesRef ri = node_ref(i);
    for (int j = i; j < nn; ++j) {
      SpeciesRef rj = node_ref(j);
      bool same_entity = (i == j) && nodes_[i].lo == nodes_[i].hi;
      auto rx = classify_pair(ri, rj, same_entity, cfg_.toggles, loop100_mobile);
      if (!rx) continue;

      int pair_id = -1;
      if (rx->law == RateLaw::K1d) {
        K1dPair pr;
        pr.a = i;
        pr.b = j;
        pr.a_1d = rx->a_1d;
        pr.b_1d = rx->b_1d;
        pr.r_extra = (is_loop(ri.family) || is_loop(rj.family)) ? params_.r_d : 0.0;
        pair_id = static_cast<int>(k1d_pairs_.size());
        k1d_pairs_.push_back(pr);
        if (pr.a_1d) mover_pairs_[mover_slot_[i]].push_back(pair_id);
        if (pr.b_1d && j != i) mover_pairs_[mover_slot_[j]].push_back(pair_id);
      }

      const bool both_exact = !nodes_[i].grouped && !nodes_[j].grouped;
      const bool i_point = ri.family == DefectFamily::SiaPoint ||
                           ri.family == DefectFamily::VacancyPoint;
      const bool j_point = rj.family == DefectFamily::SiaPoint ||
                           rj.family == DefectFamily::VacancyPoint;

      for (const auto& branch : rx->branches) {
        Channel ch;
        ch.kind = rx->kind;
        ch.law = rx->law;
        ch.weight = branch.weight;
        ch.same = (i == j);
        ch.a_1d = rx->a_1d;
        ch.b_1d = rx->b_1d;
        ch.pair_id = pair_id;
        ch.loop_side = rx->loop_side;

        if (branch.product.kind == ProductRef::Kind::VacancyReservoir) {
          // mobile vacancy caught at a trap
          ch.apply = Channel::Apply::VacCapture;
          ch.a = i_point ? i : j;
          ch.b = i_point ? j : i;
          ch.reservoir_slot = static_cast<int>(std::llround(branch.product.n));
          SpeciesRef va = node_ref(ch.a), vb = node_ref(ch.b);
          ch.k_static = true;
          ch.k0 = pair_rate_coefficient(*rx, i_point ? va : vb, i_point ? vb : va, params_);
          channels_.push_back(ch);
          continue;
        }

        // point + grouped cluster: size-shift with group-edge crossing flux
        bool shiftable = (i_point != j_point) && !is_trap(ri.family) && !is_trap(rj.family);
        int cluster = i_point ? j : i;
        int point = i_point ? i : j;
        if (shiftable && nodes_[cluster].grouped) {
          ch.apply = Channel::Apply::Shift;
          ch.a = cluster;
          ch.b = point;
          const Node& pt = nodes_[point];
          bool same_side = is_interstitial(nodes_[cluster].family) ==
                           is_interstitial(pt.family);
          ch.shift = same_side ? pt.lo : -pt.lo;
          ch.recomb = same_side ? 0.0 : pt.lo;
          // the loop (if any) is always the cluster side, stored first
          ch.loop_side = (ch.law == RateLaw::KLoop3d) ? 0 : -1;
          channels_.push_back(ch);
          continue;
        }

        ch.a = i;
        ch.b = j;
        ch.pkind = branch.product.kind;
        ch.prod_family = branch.product.family;
        ch.prod_trapped = branch.product.trapped;
        ch.signed_product = (ch.kind != ChannelKind::Trap) &&
                            (is_interstitial(ri.family) != is_interstitial(rj.family));
        if (ch.signed_product) ch.int_side = is_interstitial(ri.family) ? 0 : 1;
        ch.apply = Channel::Apply::Pair;
        if (both_exact && rx->law != RateLaw::K1d) {
          ch.k_static = true;
          ch.k0 = pair_rate_coefficient(*rx, ri, rj, params_);
        }
        channels_.push_back(ch);
      }
    }
  }

  // emission, sinks, detrapping
  for (int i = 0; i < nn; ++i) {
    const Node& node = nodes_[i];
    if (is_trap(node.family)) continue;
    SpeciesRef ref{node.family, node.trapped, static_cast<double>(node.lo)};

    if (emission_remainder(ref)) {
      Channel ch;
      ch.kind = ChannelKind::Emit;
      ch.a = i;
      bool sia_side = is_interstitial(node.family);
      ch.emit_mono_u =
          nodes_[node_of(sia_side ? DefectFamily::SiaPoint : DefectFamily::VacancyPoint,
                         false, 1)]
              .u;
      if (!node.grouped) {
        ch.apply = Channel::Apply::EmitExact;
        ch.k_static = true;
        ch.k0 = emission_rate(ref, params_, cfg_.toggles);
        auto rem = emission_remainder(ref);
        ch.product_node = node_of(rem->family, rem->trapped, rem->n);
        if (ch.k0 > 0.0) channels_.push_back(ch);
      } else {
        ch.apply = Channel::Apply::EmitGroup;
        channels_.push_back(ch);
      }
    }

    if (kinetic_mobility(ref, params_) != MobilityClass::Immobile) {
      Channel ch;
      ch.kind = ChannelKind::SinkLoss;
      ch.apply = Channel::Apply::Sink;
      ch.a = i;
      ch.side_interstitial = is_interstitial(node.family);
      channels_.push_back(ch);
    }

    if (node.family == DefectFamily::Loop111 && node.trapped && cfg_.toggles.traps) {
      Channel ch;
      ch.kind = ChannelKind::Detrap;
      ch.apply = Channel::Apply::LoopDetrap;
      ch.a = i;
      ch.k_static = true;
      ch.k0 = params_.nu_detrap *
              std::exp(-params_.e_detrap / (kBoltzmannEv * params_.temperature));
      const Axis& free_axis = axes_[axis_index(DefectFamily::Loop111, false)];
      const Axis& trap_axis = axes_[axis_index(DefectFamily::Loop111, true)];
      for (std::size_t b = 0; b < trap_axis.node_ids.size(); ++b)
        if (trap_axis.node_ids[b] == i) ch.twin = free_axis.node_ids[b];
      channels_.push_back(ch);
    }
  }

  if (cfg_.toggles.traps) {
    double nu = params_.nu_detrap *
                std::exp(-params_.e_detrap / (kBoltzmannEv * params_.temperature));
    for (int s = 1; s <= 4; ++s) {
      Channel ch;
      ch.kind = ChannelKind::Detrap;
      ch.apply = Channel::Apply::ReservoirDetrap;
      ch.reservoir_slot = s;
      ch.k_static = true;
      ch.k0 = nu;
      ch.twin = node_of(DefectFamily::VacancyPoint, false, s);
      channels_.push_back(ch);
    }
  }
}

void System::build_overlap_maps() {
  overlap_loop_bins_.clear();
  overlap_trapped_bins_.clear();
  overlap_void_bins_.clear();
  if (!cfg_.toggles.cascade_overlap) return;
  const Axis& free111 = axes_[axis_index(DefectFamily::Loop111, false)];
  const Axis& trap111 = axes_[axis_index(DefectFamily::Loop111, true)];
  const Axis& l100 = axes_[axis_index(DefectFamily::Loop100, false)];
  for (std::size_t b = 0; b < free111.node_ids.size(); ++b) {
    overlap_loop_bins_.emplace_back(free111.node_ids[b], l100.node_ids[b]);
    overlap_trapped_bins_.emplace_back(trap111.node_ids[b], l100.node_ids[b]);
  }
  for (int id : axes_[axis_index(DefectFamily::Void, false)].node_ids)
    overlap_void_bins_.push_back(id);
}

Eigen::VectorXd System::initial_state() const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n_unknowns_);
  if (cfg_.toggles.traps) {
    y[nodes_[trap_node_i_].u] = params_.trap_interstitial_density();
    y[nodes_[trap_node_t_].u] = params_.trap_transmuted_density;
  }
  return y;
}

double System::produced_rate_per_side() const { return produced_rate_per_side_; }

// --- state refresh -----------------------------------------------------------

void System::refresh_node_state(const Eigen::VectorXd& y) const {
  const int nn = static_cast<int>(nodes_.size());
  for (int i = 0; i < nn; ++i) {
    const Node& node = nodes_[i];
    double c = y[node.u];
    double reg = std::max(cfg_.group_floor, 1e-300);
    double creg = c + reg;
    double m;
    double rep;
    if (node.grouped) {
      m = y[node.u + 1];
      double mid = 0.5 * (node.lo + node.hi);
      rep = (m + mid * reg) / creg;
      double hi_lim = node.terminal ? kTerminalRepFactor * node.hi
                                    : static_cast<double>(node.hi);
      rep = std::clamp(rep, static_cast<double>(node.lo), hi_lim);
    } else {
      m = c * node.lo;
      rep = node.lo;
    }
    ns_count_[i] = c;
    ns_creg_[i] = creg;
    ns_mass_[i] = m;
    ns_rep_[i] = rep;
    if (is_trap(node.family)) {
      ns_radius_[i] = params_.r_t();
      ns_drad_dn_[i] = 0.0;
      ns_diff_[i] = 0.0;
      ns_ddiff_dn_[i] = 0.0;
      continue;
    }
    ns_radius_[i] = reaction_radius(node.family, rep, params_);
    ns_drad_dn_[i] = node.grouped ? d_reaction_radius_dn(node.family, rep, params_) : 0.0;
    SpeciesRef ref{node.family, node.trapped, rep};
    ns_diff_[i] = kinetic_diffusivity(ref, params_);
    ns_ddiff_dn_[i] =
        node.grouped ? d_diffusivity_dn(node.family, node.trapped, rep, ns_diff_[i], params_)
                     : 0.0;
  }

  // mean free paths of 1-D migrants
  std::fill(lambda_inv_.begin(), lambda_inv_.end(), 0.0);
  std::fill(dlambda_dn_.begin(), dlambda_dn_.end(), 0.0);
  for (std::size_t pidx = 0; pidx < k1d_pairs_.size(); ++pidx) {
    const K1dPair& pr = k1d_pairs_[pidx];
    double rsum = ns_radius_[pr.a] + ns_radius_[pr.b] + pr.r_extra;
    double sigma = kPi * rsum * rsum;
    double dsa = 2.0 * kPi * rsum * ns_drad_dn_[pr.a];
    double dsb = 2.0 * kPi * rsum * ns_drad_dn_[pr.b];
    pair_sigma_[pidx] = sigma;
    pair_dsig_da_[pidx] = dsa;
    pair_dsig_db_[pidx] = dsb;
    if (pr.a_1d) {
      lambda_inv_[mover_slot_[pr.a]] += sigma * ns_count_[pr.b];
      dlambda_dn_[mover_slot_[pr.a]] += dsa * ns_count_[pr.b];
    }
    if (pr.b_1d && pr.b != pr.a) {
      lambda_inv_[mover_slot_[pr.b]] += sigma * ns_count_[pr.a];
      dlambda_dn_[mover_slot_[pr.b]] += dsb * ns_count_[pr.a];
    }
  }
  for (std::size_t s = 0; s < mover_nodes_.size(); ++s) {
    int i = mover_nodes_[s];
    lambda_inv_[s] += sink_inverse_length_1d(ns_radius_[i], sinks_);
    // only the dislocation term varies with the migrant radius
    dlambda_dn_[s] += std::sqrt(2.0) * kPi * sinks_.rho_d * ns_drad_dn_[i];
  }
}

double System::inverse_mean_free_path(const Eigen::VectorXd& y, int node) const {
  refresh_node_state(y);
  int slot = mover_slot_[node];
  if (slot < 0) throw std::invalid_argument("inverse_mean_free_path: not a 1-D migrant");
  return lambda_inv_[slot];
}

// --- deposit helper ----------------------------------------------------------

// Shares (per unit event rate) for placing one cluster of `size` defects onto
// the axis of `family`, split across two bins where needed so count and mass
// stay exact. Families below their floor re-enter the point populations.
void System::deposit_cluster(DefectFamily family, bool trapped, double size,
                             Deposit out[2]) const {
  out[0] = {};
  out[1] = {};
  if (size <= 0.0) return;

  DefectFamily pt = is_interstitial(family) ? DefectFamily::SiaPoint
                                            : DefectFamily::VacancyPoint;
  int floor_sz = family_min_size(family);
  int pt_max = pt == DefectFamily::SiaPoint ? 3 : 4;

  auto axis_two_point = [&](DefectFamily fam, bool trp, double p, Deposit out2[2]) {
    // p lies inside fam's axis range
    int node = node_of(fam, trp, p);
    const Node& nd = nodes_[node];
    if (nd.grouped) {
      out2[0] = {node, 1.0, 0.0, p, 1.0};
      return;
    }
    double theta = p - nd.lo;
    if (theta <= 0.0) {
      out2[0] = {node, 1.0, 0.0, 0.0, 0.0};
      return;
    }
    int upper = node_of(fam, trp, static_cast<double>(nd.lo + 1));
    out2[0] = {node, 1.0 - theta, -1.0, 0.0, 0.0};
    const Node& up = nodes_[upper];
    double k1 = nd.lo + 1.0;
    if (up.grouped)
      out2[1] = {upper, theta, 1.0, k1 * theta, k1};
    else
      out2[1] = {upper, theta, 1.0, 0.0, 0.0};
  };

  if (family == pt || size <= pt_max) {
    // point axis; partial deposits below one defect keep the mass exact
    if (size < 1.0) {
      int node = node_of(pt, false, 1.0);
      out[0] = {node, size, 1.0, 0.0, 0.0};
      return;
    }
    axis_two_point(pt, false, std::min(size, static_cast<double>(pt_max)), out);
    return;
  }
  if (size >= floor_sz) {
    axis_two_point(family, trapped, size, out);
    return;
  }
  // straddling the family floor: split between the largest point cluster and
  // the smallest extended cluster (the gap is always one defect wide)
  double theta = size - pt_max;
  int lo_node = node_of(pt, false, pt_max);
  int hi_node = node_of(family, trapped, floor_sz);
  out[0] = {lo_node, 1.0 - theta, -1.0, 0.0, 0.0};
  if (nodes_[hi_node].grouped)
    out[1] = {hi_node, theta, 1.0, floor_sz * theta, static_cast<double>(floor_sz)};
  else
    out[1] = {hi_node, theta, 1.0, 0.0, 0.0};
}

// Emission coefficient g(n) of a grouped cluster bin and its size derivative:
// g = (1/Omega) k_{n-1} exp(-E_b(n)/kT). Matches emission_rate() for integer
// sizes; used where the representative size drifts.
void System::emission_coeff_grad(DefectFamily family, bool trapped, double n, double& g,
                                 double& dg_dn) const {
  g = 0.0;
  dg_dn = 0.0;
  const double kt = kBoltzmannEv * params_.temperature;
  double eb, deb;
  const bool sia_side = is_interstitial(family);
  if (sia_side) {
    DefectFamily fit =
        family == DefectFamily::Loop100 ? DefectFamily::Loop100 : DefectFamily::Loop111;
    eb = params_.ef_sia + formation_energy_loop(fit, n - 1.0, params_) -
         formation_energy_loop(fit, n, params_);
    deb = d_formation_energy_loop_dn(fit, n - 1.0, params_) -
          d_formation_energy_loop_dn(fit, n, params_);
  } else {
    eb = params_.ef_vacancy + formation_energy_void(n - 1.0, params_) -
         formation_energy_void(n, params_);
    deb = d_formation_energy_void_dn(n - 1.0, params_) - d_formation_energy_void_dn(n, params_);
  }

  SideVals rem, mono;
  double nr = n - 1.0;
  rem.d = kinetic_diffusivity({family, trapped, nr}, params_);
  rem.dd = d_diffusivity_dn(family, trapped, nr, rem.d, params_);
  rem.r = reaction_radius(family, nr, params_);
  rem.dr = d_reaction_radius_dn(family, nr, params_);
  DefectFamily mono_family = sia_side ? DefectFamily::SiaPoint : DefectFamily::VacancyPoint;
  mono.d = kinetic_diffusivity({mono_family, false, 1.0}, params_);
  mono.r = reaction_radius(mono_family, 1.0, params_);

  double k, dk_rem, dk_mono;
  if (is_loop(family))
    k = kloop3d_grad(rem, mono, params_.r_d, dk_rem, dk_mono);
  else
    k = k3d3d_grad(rem, mono, dk_rem, dk_mono);

  double boltz = std::exp(-eb / kt);
  g = k / params_.omega() * boltz;
  dg_dn = (dk_rem - k * deb / kt) / params_.omega() * boltz;
}

// --- state queries -----------------------------------------------------------

double System::bin_count(const Eigen::VectorXd& y, int node) const { return y[nodes_[node].u]; }

double System::bin_mass(const Eigen::VectorXd& y, int node) const {
  const Node& nd = nodes_[node];
  return nd.grouped ? y[nd.u + 1] : y[nd.u] * nd.lo;
}

double System::bin_mean_size(const Eigen::VectorXd& y, int node) const {
  const Node& nd = nodes_[node];
  if (!nd.grouped) return nd.lo;
  double mid = 0.5 * (nd.lo + nd.hi);
  double reg = std::max(cfg_.group_floor, 1e-300);
  return (y[nd.u + 1] + mid * reg) / (y[nd.u] + reg);
}

double System::family_density(const Eigen::VectorXd& y, DefectFamily family,
                              int trapped) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& nd = nodes_[i];
    if (nd.family != family) continue;
    if (trapped >= 0 && nd.trapped != (trapped == 1)) continue;
    sum += y[nd.u];
  }
  return sum;
}

double System::family_mass(const Eigen::VectorXd& y, DefectFamily family, int trapped) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& nd = nodes_[i];
    if (nd.family != family) continue;
    if (trapped >= 0 && nd.trapped != (trapped == 1)) continue;
    sum += bin_mass(y, static_cast<int>(i));
  }
  return sum;
}

MassReport System::mass_report(const StateVector& state) const {
  MassReport rep;
  rep.produced_interstitial = produced_rate_per_side_ * state.time;
  rep.produced_vacancy = rep.produced_interstitial;

  double term_i = 0.0, term_v = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& nd = nodes_[i];
    if (is_trap(nd.family)) continue;
    double m = bin_mass(state.y, static_cast<int>(i));
    if (is_interstitial(nd.family)) {
      rep.in_state_interstitial += m;
      if (nd.terminal) term_i += m;
    } else {
      rep.in_state_vacancy += m;
      if (nd.terminal) term_v += m;
    }
  }
  for (int s = 1; s <= 4; ++s) rep.in_state_vacancy += s * state.y[reservoir_unknown(s)];

  rep.sinks_interstitial = state.y[ledger_unknown(LedgerSlot::SinkDislocationI)] +
                           state.y[ledger_unknown(LedgerSlot::SinkGrainBoundaryI)] +
                           state.y[ledger_unknown(LedgerSlot::SinkSurfaceI)];
  rep.sinks_vacancy = state.y[ledger_unknown(LedgerSlot::SinkDislocationV)] +
                      state.y[ledger_unknown(LedgerSlot::SinkGrainBoundaryV)] +
                      state.y[ledger_unknown(LedgerSlot::SinkSurfaceV)];
  rep.recombined = state.y[ledger_unknown(LedgerSlot::Recombined)];
  rep.terminal_fraction_interstitial =
      rep.in_state_interstitial > 0.0 ? term_i / rep.in_state_interstitial : 0.0;
  rep.terminal_fraction_vacancy =
      rep.in_state_vacancy > 0.0 ? term_v / rep.in_state_vacancy : 0.0;
  return rep;
}

std::vector<System::LoopExchange> System::loop_exchange_rates(const Eigen::VectorXd& y) const {
  refresh_node_state(y);
  std::vector<LoopExchange> out;
  for (const Channel& ch : channels_) {
    if (ch.apply != Channel::Apply::Pair || ch.law != RateLaw::K1d) continue;
    const Node& na = nodes_[ch.a];
    const Node& nb = nodes_[ch.b];
    bool cross = (na.family == DefectFamily::Loop111 && nb.family == DefectFamily::Loop100) ||
                 (na.family == DefectFamily::Loop100 && nb.family == DefectFamily::Loop111);
    if (!cross) continue;
    double sg = pair_sigma_[ch.pair_id];
    double w = (ch.a_1d ? 2.0 * ns_diff_[ch.a] * lambda_inv_[mover_slot_[ch.a]] : 0.0) +
               (ch.b_1d ? 2.0 * ns_diff_[ch.b] * lambda_inv_[mover_slot_[ch.b]] : 0.0);
    double rate = ch.weight * sg * w * ns_count_[ch.a] * ns_count_[ch.b];
    LoopExchange ex;
    bool a_is_111 = na.family == DefectFamily::Loop111;
    ex.n_111 = a_is_111 ? ns_rep_[ch.a] : ns_rep_[ch.b];
    ex.n_100 = a_is_111 ? ns_rep_[ch.b] : ns_rep_[ch.a];
    ex.rate = rate;
    ex.winner_111 = ch.prod_family == DefectFamily::Loop111 ? 1 : 0;
    ex.weight = ch.weight;
    out.push_back(ex);
  }
  return out;
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> System::sparsity_pattern() const {
  using BoolMat = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
  BoolMat pat = BoolMat::Constant(n_unknowns_, n_unknowns_, false);

  auto node_unknowns = [&](int node, std::vector<int>& out) {
    out.push_back(nodes_[node].u);
    if (nodes_[node].grouped) out.push_back(nodes_[node].u + 1);
  };
  auto axis_span_rows = [&](DefectFamily family, bool trapped, double lo, double hi,
                            std::vector<int>& rows) {
    // every bin a product in [lo, hi] could land in, including floor spill
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& nd = nodes_[i];
      bool family_ok =
          (nd.family == family && nd.trapped == trapped) ||
          (is_interstitial(family) ? nd.family == DefectFamily::SiaPoint
                                   : nd.family == DefectFamily::VacancyPoint);
      if (!family_ok) continue;
      if (nd.hi + 1.0 < lo || nd.lo - 1.0 > hi) continue;
      node_unknowns(static_cast<int>(i), rows);
    }
  };

  const int led0 = ledger_u0_;
  for (const Channel& ch : channels_) {
    std::vector<int> rows, cols;
    if (ch.a >= 0) node_unknowns(ch.a, cols);
    if (ch.b >= 0) node_unknowns(ch.b, cols);
    rows = cols;
    switch (ch.apply) {
      case Channel::Apply::Pair: {
        double pa = ns_rep_.empty() ? 0 : 0;  // structural: use bin bounds
        (void)pa;
        double lo_a = nodes_[ch.a].lo, hi_a = nodes_[ch.a].hi;
        double lo_b = nodes_[ch.b].lo, hi_b = nodes_[ch.b].hi;
        if (ch.kind == ChannelKind::Trap) {
          int captured = is_trap(nodes_[ch.a].family) ? ch.b : ch.a;
          axis_span_rows(DefectFamily::Loop111, true, nodes_[captured].lo,
                         nodes_[captured].hi, rows);
        } else if (ch.signed_product) {
          int inode = ch.int_side == 0 ? ch.a : ch.b;
          int vnode = ch.int_side == 0 ? ch.b : ch.a;
          axis_span_rows(nodes_[inode].family, nodes_[inode].trapped, 1.0,
                         std::max(0.0, nodes_[inode].hi - static_cast<double>(nodes_[vnode].lo)),
                         rows);
          axis_span_rows(nodes_[vnode].family, false, 1.0,
                         std::max(0.0, nodes_[vnode].hi - static_cast<double>(nodes_[inode].lo)),
                         rows);
          rows.push_back(ledger_unknown(LedgerSlot::Recombined));
        } else if (ch.pkind == ProductRef::Kind::Cluster) {
          axis_span_rows(ch.prod_family, ch.prod_trapped, lo_a + lo_b, hi_a + hi_b, rows);
        }
        if (ch.law == RateLaw::K1d) {
          // mean-free-path couplings reach every obstacle of the movers
          for (int side = 0; side < 2; ++side) {
            bool is_1d = side == 0 ? ch.a_1d : ch.b_1d;
            if (!is_1d) continue;
            int slot = mover_slot_[side == 0 ? ch.a : ch.b];
            for (int pid : mover_pairs_[slot]) {
              node_unknowns(k1d_pairs_[pid].a, cols);
              node_unknowns(k1d_pairs_[pid].b, cols);
            }
          }
        }
        break;
      }
      case Channel::Apply::Shift: {
        const Node& g = nodes_[ch.a];
        axis_span_rows(g.family, g.trapped, g.lo + std::min(ch.shift, 0),
                       g.hi + std::max(ch.shift, 0), rows);
        if (ch.recomb > 0.0) rows.push_back(ledger_unknown(LedgerSlot::Recombined));
        break;
      }
      case Channel::Apply::EmitExact:
      case Channel::Apply::EmitGroup: {
        const Node& g = nodes_[ch.a];
        rows.push_back(ch.emit_mono_u);
        axis_span_rows(g.family, g.trapped, g.lo - 1.0, g.hi, rows);
        break;
      }
      case Channel::Apply::Sink:
        for (int k = 0; k < static_cast<int>(LedgerSlot::Count); ++k) rows.push_back(led0 + k);
        break;
      case Channel::Apply::VacCapture:
        rows.push_back(reservoir_unknown(ch.reservoir_slot));
        break;
      case Channel::Apply::LoopDetrap:
        node_unknowns(ch.twin, rows);
        break;
      case Channel::Apply::ReservoirDetrap:
        rows.push_back(reservoir_unknown(ch.reservoir_slot));
        cols.push_back(reservoir_unknown(ch.reservoir_slot));
        node_unknowns(ch.twin, rows);
        break;
    }
    for (int r : rows)
      for (int c : cols) pat(r, c) = true;
  }

  // overlap couplings
  auto mark_pair = [&](int a, int b) {
    std::vector<int> ua, ub;
    ua.push_back(nodes_[a].u);
    if (nodes_[a].grouped) ua.push_back(nodes_[a].u + 1);
    ub.push_back(nodes_[b].u);
    if (nodes_[b].grouped) ub.push_back(nodes_[b].u + 1);
    for (int r : ua)
      for (int c : ua) pat(r, c) = true;
    for (int r : ub)
      for (int c : ub) pat(r, c) = true;
    for (int r : ua)
      for (int c : ub) {
        pat(r, c) = true;
        pat(c, r) = true;
      }
  };
  for (auto [a, b] : overlap_loop_bins_) mark_pair(a, b);
  for (auto [a, b] : overlap_trapped_bins_) mark_pair(a, b);
  for (int v : overlap_void_bins_) {
    mark_pair(v, v);
    pat(v1_unknown_, nodes_[v].u) = true;
    if (nodes_[v].grouped) pat(v1_unknown_, nodes_[v].u + 1) = true;
  }
  return pat;
}

}  // namespace wcd
