#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "wcd/assembly.hpp"
#include "wcd/constants.hpp"
#include "assembly_internal.hpp"

namespace wcd {

namespace {

struct SideVals {
  double d = 0.0, dd = 0.0, r = 0.0, dr = 0.0;
};

double k3d3d_grad(const SideVals& a, const SideVals& b, double& dka, double& dkb) {
  double s = a.d + b.d;
  double rr = a.r + b.r;
  dka = 4.0 * kPi * (a.dd * rr + s * a.dr);
  dkb = 4.0 * kPi * (b.dd * rr + s * b.dr);
  return 4.0 * kPi * s * rr;
}

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
  double dzl_dry =
      4.0 * kPi * kPi / ln - 4.0 * kPi * kPi * loop.r * (8.0 / rc) / (lnarg * ln * ln);
  double dzl_drc =
      4.0 * kPi * kPi * loop.r * (8.0 * loop.r / (rc * rc)) / (lnarg * ln * ln);
  double dgeom_dry =
      dalpha_du / (3.0 * rc) * (z_v - z_l) + (1.0 - alpha) * dzl_dry + alpha * 4.0 * kPi;
  double dgeom_drc =
      dalpha_du * (-u / rc) * (z_v - z_l) + (1.0 - alpha) * dzl_drc + alpha * 4.0 * kPi;

  dk_loop = loop.dd * geom + s * dgeom_dry * loop.dr;
  dk_x = x.dd * geom + s * dgeom_drc * x.dr;
  return s * geom;
}

// small fixed-capacity (column, value) list
struct Cols {
  std::array<std::pair<int, double>, 10> v{};
  int n = 0;
  void add(int col, double val) {
    if (col < 0 || val == 0.0) return;
    v[n++] = {col, val};
  }
};

}  // namespace

void System::rhs(const Eigen::VectorXd& y, Eigen::VectorXd& dydt) const {
  eval(y, &dydt, nullptr);
}

void System::jacobian(const Eigen::VectorXd& y, Eigen::MatrixXd& jac) const {
  eval(y, nullptr, &jac);
}

void System::eval(const Eigen::VectorXd& y, Eigen::VectorXd* dydt,
                  Eigen::MatrixXd* jac) const {
  refresh_node_state(y);
  const int n = n_unknowns_;
  if (dydt) *dydt = production_;
  if (jac) {
    jac->resize(n, n);
    jac->setZero();
    if (lam_acc_.rows() != static_cast<Eigen::Index>(mover_nodes_.size()) ||
        lam_acc_.cols() != n)
      lam_acc_.resize(static_cast<Eigen::Index>(mover_nodes_.size()), n);
    lam_acc_.setZero();
  }

  auto cu = [&](int node) { return nodes_[node].u; };
  auto mu = [&](int node) { return nodes_[node].grouped ? nodes_[node].u + 1 : -1; };
  auto chain_on = [&](int node) {
    const Node& nd = nodes_[node];
    if (!nd.grouped) return false;
    double rep = ns_rep_[node];
    if (rep <= nd.lo) return false;
    if (rep >= (nd.terminal ? 10.0 * nd.hi : static_cast<double>(nd.hi))) return false;
    return true;
  };

  // --- cascade overlap (linear in state) ------------------------------------
  if (cfg_.toggles.cascade_overlap && cfg_.overlap.f_ol > 0.0) {
    const double fol = cfg_.overlap.f_ol;
    auto transfer = [&](int src, int dst, double q) {
      // moves count and mass at rate q * (N_src, M_src); bin layouts match
      if (dydt) {
        double dn = q * ns_count_[src];
        (*dydt)[cu(src)] -= dn;
        (*dydt)[cu(dst)] += dn;
        if (nodes_[src].grouped) {
          double dm = q * y[mu(src)];
          (*dydt)[mu(src)] -= dm;
          (*dydt)[mu(dst)] += dm;
        }
      }
      if (jac) {
        (*jac)(cu(src), cu(src)) -= q;
        (*jac)(cu(dst), cu(src)) += q;
        if (nodes_[src].grouped) {
          (*jac)(mu(src), mu(src)) -= q;
          (*jac)(mu(dst), mu(src)) += q;
        }
      }
    };
    for (auto [f111, l100] : overlap_loop_bins_) {
      double rep = ns_rep_[f111];
      transfer(l100, f111, cfg_.overlap.f_111_to_100_at(rep) * fol);
      transfer(f111, l100, cfg_.overlap.f_100_to_111_at(rep) * fol);
    }
    for (auto [t111, l100] : overlap_trapped_bins_)
      transfer(t111, l100, cfg_.overlap.f_100_to_111_at(ns_rep_[t111]) * fol);
    // void dissolution back into mobile monovacancies
    for (int v : overlap_void_bins_) {
      double q = cfg_.overlap.f_void_at(ns_rep_[v]) * fol;
      if (q == 0.0) continue;
      if (dydt) {
        (*dydt)[cu(v)] -= q * ns_count_[v];
        (*dydt)[v1_unknown_] += q * ns_mass_[v];
        if (nodes_[v].grouped) (*dydt)[mu(v)] -= q * y[mu(v)];
      }
      if (jac) {
        (*jac)(cu(v), cu(v)) -= q;
        if (nodes_[v].grouped) {
          (*jac)(mu(v), mu(v)) -= q;
          (*jac)(v1_unknown_, mu(v)) += q;
        } else {
          (*jac)(v1_unknown_, cu(v)) += q * nodes_[v].lo;
        }
      }
    }
  }

  // --- reaction channels -----------------------------------------------------
  const int led_recomb = ledger_unknown(LedgerSlot::Recombined);

  for (const Channel& ch : channels_) {
    switch (ch.apply) {
      case Channel::Apply::Pair: {
        const int A = ch.a, B = ch.b;
        const double ca = ns_count_[A], cb = ns_count_[B];
        const double f = ch.weight * (ch.same ? 0.5 : 1.0);
        const bool chA = chain_on(A), chB = chain_on(B);
        double k = 0.0, dka = 0.0, dkb = 0.0;
        double coefA = 0.0, coefB = 0.0;  // dR/dLambda for the mover sides
        int slotA = -1, slotB = -1;

        if (ch.law == RateLaw::K1d) {
          const double sg = pair_sigma_[ch.pair_id];
          const double dsa = pair_dsig_da_[ch.pair_id], dsb = pair_dsig_db_[ch.pair_id];
          const double da = ns_diff_[A], db = ns_diff_[B];
          double la = 0.0, lb = 0.0;
          if (ch.a_1d) {
            slotA = mover_slot_[A];
            la = lambda_inv_[slotA];
          }
          if (ch.b_1d) {
            slotB = mover_slot_[B];
            lb = lambda_inv_[slotB];
          }
          const double w = (ch.a_1d ? 2.0 * da * la : 0.0) + (ch.b_1d ? 2.0 * db * lb : 0.0);
          k = sg * w;
          coefA = ch.a_1d ? f * sg * 2.0 * da * ca * cb : 0.0;
          coefB = ch.b_1d ? f * sg * 2.0 * db * ca * cb : 0.0;
          dka = dsa * w + (ch.a_1d ? sg * 2.0 * ns_ddiff_dn_[A] * la : 0.0);
          dkb = dsb * w + (ch.b_1d ? sg * 2.0 * ns_ddiff_dn_[B] * lb : 0.0);
        } else if (ch.k_static) {
          k = ch.k0;
        } else {
          SideVals va{ns_diff_[A], ns_ddiff_dn_[A], ns_radius_[A], ns_drad_dn_[A]};
          SideVals vb{ns_diff_[B], ns_ddiff_dn_[B], ns_radius_[B], ns_drad_dn_[B]};
          if (ch.law == RateLaw::K3d3d)
            k = k3d3d_grad(va, vb, dka, dkb);
          else if (ch.loop_side == 0)
            k = kloop3d_grad(va, vb, params_.r_d, dka, dkb);
          else
            k = kloop3d_grad(vb, va, params_.r_d, dkb, dka);
        }

        const double rate = f * k * ca * cb;

        Cols drate;  // dR/dcol, lambda factors excluded
        drate.add(cu(A), f * k * cb);
        drate.add(cu(B), f * k * ca);
        if (chA) {
          drate.add(cu(A), -f * dka * ns_rep_[A] * cb);
          drate.add(mu(A), f * dka * cb);
        }
        if (chB) {
          drate.add(cu(B), -f * dkb * ns_rep_[B] * ca);
          drate.add(mu(B), f * dkb * ca);
        }

        auto flow = [&](int row, double phi, const Cols& dphi) {
          if (row < 0) return;
          if (dydt) (*dydt)[row] += phi * rate;
          if (jac) {
            for (int i = 0; i < drate.n; ++i)
              (*jac)(row, drate.v[i].first) += phi * drate.v[i].second;
            for (int i = 0; i < dphi.n; ++i)
              (*jac)(row, dphi.v[i].first) += rate * dphi.v[i].second;
            if (coefA != 0.0) lam_acc_(slotA, row) += phi * coefA;
            if (coefB != 0.0) lam_acc_(slotB, row) += phi * coefB;
          }
        };
        const Cols no_dphi;

        // removals (traps are catalytic and keep their concentration)
        for (int side = 0; side < 2; ++side) {
          int node = side == 0 ? A : B;
          if (is_trap(nodes_[node].family)) continue;
          bool chn = side == 0 ? chA : chB;
          flow(cu(node), -1.0, no_dphi);
          if (nodes_[node].grouped) {
            Cols dphi;
            if (chn) {
              dphi.add(cu(node), ns_rep_[node] / ns_creg_[node]);
              dphi.add(mu(node), -1.0 / ns_creg_[node]);
            }
            flow(mu(node), -ns_rep_[node], dphi);
          }
        }

        // product
        double p = 0.0;
        double dp_a = 0.0, dp_b = 0.0;  // dp/dn_a, dp/dn_b
        DefectFamily pfam = ch.prod_family;
        bool ptrap = ch.prod_trapped;
        bool has_product = ch.pkind == ProductRef::Kind::Cluster;
        if (ch.kind == ChannelKind::Trap) {
          int captured = is_trap(nodes_[A].family) ? B : A;
          p = ns_rep_[captured];
          (captured == A ? dp_a : dp_b) = 1.0;
        } else if (ch.signed_product) {
          int inode = ch.int_side == 0 ? A : B;
          int vnode = ch.int_side == 0 ? B : A;
          double net = ns_rep_[inode] - ns_rep_[vnode];
          if (net == 0.0) {
            has_product = false;
          } else {
            SpeciesRef iref{nodes_[inode].family, nodes_[inode].trapped, ns_rep_[inode]};
            SpeciesRef vref{nodes_[vnode].family, nodes_[vnode].trapped, ns_rep_[vnode]};
            ProductRef prod = resolve_signed_product(net, iref, vref);
            has_product = prod.kind == ProductRef::Kind::Cluster;
            pfam = prod.family;
            ptrap = prod.trapped;
            p = prod.n;
            double sgn = net > 0.0 ? 1.0 : -1.0;
            (ch.int_side == 0 ? dp_a : dp_b) = sgn;
            (ch.int_side == 0 ? dp_b : dp_a) = -sgn;
          }
          // annihilated interstitial-vacancy pairs
          double annih = std::min(ns_rep_[inode], ns_rep_[vnode]);
          Cols dled;
          int argmin = ns_rep_[inode] <= ns_rep_[vnode] ? inode : vnode;
          if (chain_on(argmin)) {
            dled.add(cu(argmin), -ns_rep_[argmin] / ns_creg_[argmin]);
            dled.add(mu(argmin), 1.0 / ns_creg_[argmin]);
          }
          flow(led_recomb, annih, dled);
        } else {
          p = ns_rep_[A] + ns_rep_[B];
          dp_a = 1.0;
          dp_b = 1.0;
        }

        if (has_product) {
          Cols dp_cols;  // dp/dcol
          if (chA && dp_a != 0.0) {
            dp_cols.add(cu(A), -dp_a * ns_rep_[A] / ns_creg_[A]);
            dp_cols.add(mu(A), dp_a / ns_creg_[A]);
          }
          if (chB && dp_b != 0.0) {
            dp_cols.add(cu(B), -dp_b * ns_rep_[B] / ns_creg_[B]);
            dp_cols.add(mu(B), dp_b / ns_creg_[B]);
          }
          Deposit dep[2];
          deposit_cluster(pfam, ptrap, p, dep);
          for (const Deposit& d : dep) {
            if (d.node < 0) continue;
            Cols dc, dm;
            for (int i = 0; i < dp_cols.n; ++i) {
              dc.add(dp_cols.v[i].first, d.dcount_dp * dp_cols.v[i].second);
              dm.add(dp_cols.v[i].first, d.dmass_dp * dp_cols.v[i].second);
            }
            flow(cu(d.node), d.count, dc);
            if (nodes_[d.node].grouped) flow(mu(d.node), d.mass, dm);
          }
        }
        break;
      }

      case Channel::Apply::Shift: {
        const int G = ch.a, P = ch.b;
        const Node& g = nodes_[G];
        const double cg = ns_count_[G], cpt = ns_count_[P];
        const bool chG = chain_on(G);
        SideVals vg{ns_diff_[G], ns_ddiff_dn_[G], ns_radius_[G], ns_drad_dn_[G]};
        SideVals vp{ns_diff_[P], 0.0, ns_radius_[P], 0.0};
        double k, dkg, dkp;
        if (ch.law == RateLaw::KLoop3d)
          k = kloop3d_grad(vg, vp, params_.r_d, dkg, dkp);
        else
          k = k3d3d_grad(vg, vp, dkg, dkp);
        const double f = ch.weight;
        const double r_tot = f * k * cpt * cg;

        Cols dr_tot;
        dr_tot.add(cu(P), f * k * cg);
        dr_tot.add(cu(G), f * k * cpt);
        if (chG) {
          dr_tot.add(cu(G), -f * dkg * ns_rep_[G] * cpt);
          dr_tot.add(mu(G), f * dkg * cpt);
        }
        auto put = [&](int row, double phi, double r_piece, const Cols& dr_piece) {
          if (row < 0 || phi == 0.0) return;
          if (dydt) (*dydt)[row] += phi * r_piece;
          if (jac)
            for (int i = 0; i < dr_piece.n; ++i)
              (*jac)(row, dr_piece.v[i].first) += phi * dr_piece.v[i].second;
        };

        put(cu(P), -1.0, r_tot, dr_tot);
        put(mu(G), static_cast<double>(ch.shift), r_tot, dr_tot);
        if (ch.recomb > 0.0) put(led_recomb, ch.recomb, r_tot, dr_tot);

        const int s = std::abs(ch.shift);
        const bool up = ch.shift > 0;
        if (!(up && g.terminal)) {
          const int w = g.width();
          const double mid = 0.5 * (g.lo + g.hi);
          const double s2 = w > 1 ? w * (static_cast<double>(w) * w - 1.0) / 12.0 : 1.0;
          for (int i = 0; i < s; ++i) {
            int e = up ? g.hi - i : g.lo + i;
            if (e < g.lo || e > g.hi) break;
            double alpha = 1.0 / w, beta = 0.0;
            if (w > 1) {
              beta = (e - mid) / s2;
              alpha = 1.0 / w - mid * beta;
            }
            double ce = alpha * cg + beta * ns_mass_[G];
            if (ce <= 0.0) continue;
            double r_f = f * k * cpt * ce;
            Cols dr_f;
            dr_f.add(cu(P), f * k * ce);
            dr_f.add(cu(G), f * cpt * k * alpha);
            dr_f.add(mu(G), f * cpt * k * beta);
            if (chG) {
              dr_f.add(cu(G), -f * dkg * ns_rep_[G] * cpt * ce / ns_creg_[G]);
              dr_f.add(mu(G), f * dkg * cpt * ce / ns_creg_[G]);
            }
            int target = node_of(g.family, g.trapped, static_cast<double>(e + ch.shift));
            put(cu(G), -1.0, r_f, dr_f);
            put(mu(G), -static_cast<double>(e + ch.shift), r_f, dr_f);
            put(cu(target), 1.0, r_f, dr_f);
            if (nodes_[target].grouped)
              put(mu(target), static_cast<double>(e + ch.shift), r_f, dr_f);
          }
        }
        break;
      }

      case Channel::Apply::EmitExact: {
        const int A = ch.a;
        const double rate = ch.k0 * ns_count_[A];
        if (dydt) {
          (*dydt)[cu(A)] -= rate;
          (*dydt)[cu(ch.product_node)] += rate;
          (*dydt)[ch.emit_mono_u] += rate;
          if (nodes_[ch.product_node].grouped)
            (*dydt)[mu(ch.product_node)] += rate * (nodes_[A].lo - 1);
        }
        if (jac) {
          (*jac)(cu(A), cu(A)) -= ch.k0;
          (*jac)(cu(ch.product_node), cu(A)) += ch.k0;
          (*jac)(ch.emit_mono_u, cu(A)) += ch.k0;
          if (nodes_[ch.product_node].grouped)
            (*jac)(mu(ch.product_node), cu(A)) += ch.k0 * (nodes_[A].lo - 1);
        }
        break;
      }

      case Channel::Apply::EmitGroup: {
        const int G = ch.a;
        const Node& g = nodes_[G];
        const double cg = ns_count_[G];
        const bool chG = chain_on(G);
        double gc, dg;
        emission_coeff_grad(g.family, g.trapped, ns_rep_[G], gc, dg);
        if (gc <= 0.0 && dg == 0.0) break;
        const double r_tot = gc * cg;
        Cols dr_tot;
        dr_tot.add(cu(G), gc);
        if (chG) {
          dr_tot.add(cu(G), -dg * ns_rep_[G]);
          dr_tot.add(mu(G), dg);
        }
        auto put = [&](int row, double phi, double r_piece, const Cols& dr_piece) {
          if (row < 0 || phi == 0.0) return;
          if (dydt) (*dydt)[row] += phi * r_piece;
          if (jac)
            for (int i = 0; i < dr_piece.n; ++i)
              (*jac)(row, dr_piece.v[i].first) += phi * dr_piece.v[i].second;
        };
        put(mu(G), -1.0, r_tot, dr_tot);
        put(ch.emit_mono_u, 1.0, r_tot, dr_tot);
        // lower-edge crossing
        const int w = g.width();
        const double mid = 0.5 * (g.lo + g.hi);
        const double s2 = w > 1 ? w * (static_cast<double>(w) * w - 1.0) / 12.0 : 1.0;
        double beta = w > 1 ? (g.lo - mid) / s2 : 0.0;
        double alpha = w > 1 ? 1.0 / w - mid * (g.lo - mid) / s2 : 1.0;
        double ce = alpha * cg + beta * ns_mass_[G];
        if (ce > 0.0) {
          double r_f = gc * ce;
          Cols dr_f;
          dr_f.add(cu(G), gc * alpha);
          dr_f.add(mu(G), gc * beta);
          if (chG) {
            dr_f.add(cu(G), -dg * ns_rep_[G] * ce / ns_creg_[G]);
            dr_f.add(mu(G), dg * ce / ns_creg_[G]);
          }
          int target = node_of(g.family, g.trapped, static_cast<double>(g.lo - 1));
          put(cu(G), -1.0, r_f, dr_f);
          put(mu(G), -(g.lo - 1.0), r_f, dr_f);
          put(cu(target), 1.0, r_f, dr_f);
          if (nodes_[target].grouped) put(mu(target), g.lo - 1.0, r_f, dr_f);
        }
        break;
      }

      case Channel::Apply::Sink: {
        const int A = ch.a;
        const Node& nd = nodes_[A];
        const double c = ns_count_[A];
        const bool chA = chain_on(A);
        SpeciesRef ref{nd.family, nd.trapped, ns_rep_[A]};
        MobilityClass mob = kinetic_mobility(ref, params_);
        double d = ns_diff_[A];
        if (d <= 0.0 && ns_ddiff_dn_[A] == 0.0) break;
        SinkStrengths l = sink_strengths(mob, ns_radius_[A], sinks_);
        const double z = ch.side_interstitial ? sinks_.bias_z : 1.0;
        const double rc = sinks_.r_d + ns_radius_[A];
        double dl_dr = mob == MobilityClass::OneD
                           ? 4.0 * kPi * kPi * rc * sinks_.rho_d * sinks_.rho_d
                           : [&] {
                               double rho = rc * std::sqrt(kPi * sinks_.rho_d);
                               double rho2 = rho * rho;
                               double denom =
                                   std::log(1.0 / rho) - 0.75 + 0.25 * rho2 * (4.0 - rho2);
                               double ddenom = -1.0 / rho + 2.0 * rho - rho2 * rho;
                               double dldrho = 2.0 * kPi * sinks_.rho_d *
                                               ((-2.0 * rho) * denom - (1.0 - rho2) * ddenom) /
                                               (denom * denom);
                               return dldrho * std::sqrt(kPi * sinks_.rho_d);
                             }();

        const double q[3] = {d * z * l.dislocation, d * l.grain_boundary, d * l.surface};
        const double dq_dn[3] = {
            ns_ddiff_dn_[A] * z * l.dislocation + d * z * dl_dr * ns_drad_dn_[A],
            ns_ddiff_dn_[A] * l.grain_boundary, ns_ddiff_dn_[A] * l.surface};
        const LedgerSlot slots_i[3] = {LedgerSlot::SinkDislocationI,
                                       LedgerSlot::SinkGrainBoundaryI,
                                       LedgerSlot::SinkSurfaceI};
        const LedgerSlot slots_v[3] = {LedgerSlot::SinkDislocationV,
                                       LedgerSlot::SinkGrainBoundaryV,
                                       LedgerSlot::SinkSurfaceV};
        double q_sum = q[0] + q[1] + q[2];
        double dq_sum = dq_dn[0] + dq_dn[1] + dq_dn[2];
        const double rep = ns_rep_[A];
        if (dydt) {
          (*dydt)[cu(A)] -= q_sum * c;
          if (nd.grouped) (*dydt)[mu(A)] -= q_sum * c * rep;
          for (int sidx = 0; sidx < 3; ++sidx) {
            if (q[sidx] == 0.0) continue;
            int led = ledger_unknown(ch.side_interstitial ? slots_i[sidx] : slots_v[sidx]);
            (*dydt)[led] += q[sidx] * c * rep;
          }
        }
        if (jac) {
          Cols dr;  // d(q_sum * c)/dcol
          dr.add(cu(A), q_sum);
          if (chA) {
            dr.add(cu(A), -dq_sum * rep);
            dr.add(mu(A), dq_sum);
          }
          for (int i = 0; i < dr.n; ++i) (*jac)(cu(A), dr.v[i].first) -= dr.v[i].second;
          if (nd.grouped) {
            // mass flux is q_sum * c * rep = q_sum(n) * M
            Cols dm;
            dm.add(mu(A), q_sum);
            if (chA) {
              dm.add(cu(A), -dq_sum * rep * rep);
              dm.add(mu(A), dq_sum * rep);
            }
            for (int i = 0; i < dm.n; ++i) (*jac)(mu(A), dm.v[i].first) -= dm.v[i].second;
          }
          for (int sidx = 0; sidx < 3; ++sidx) {
            if (q[sidx] == 0.0 && dq_dn[sidx] == 0.0) continue;
            int led = ledger_unknown(ch.side_interstitial ? slots_i[sidx] : slots_v[sidx]);
            if (nd.grouped) {
              (*jac)(led, mu(A)) += q[sidx];
              if (chA) {
                (*jac)(led, cu(A)) += -dq_dn[sidx] * rep * rep;
                (*jac)(led, mu(A)) += dq_dn[sidx] * rep;
              }
            } else {
              (*jac)(led, cu(A)) += q[sidx] * rep;
            }
          }
        }
        break;
      }

      case Channel::Apply::VacCapture: {
        const int V = ch.a, T = ch.b;
        const double rate = ch.k0 * ns_count_[V] * ns_count_[T];
        int res = reservoir_unknown(ch.reservoir_slot);
        if (dydt) {
          (*dydt)[cu(V)] -= rate;
          (*dydt)[res] += rate;
        }
        if (jac) {
          (*jac)(cu(V), cu(V)) -= ch.k0 * ns_count_[T];
          (*jac)(cu(V), cu(T)) -= ch.k0 * ns_count_[V];
          (*jac)(res, cu(V)) += ch.k0 * ns_count_[T];
          (*jac)(res, cu(T)) += ch.k0 * ns_count_[V];
        }
        break;
      }

      case Channel::Apply::LoopDetrap: {
        const int A = ch.a, F = ch.twin;
        if (dydt) {
          double rn = ch.k0 * ns_count_[A];
          (*dydt)[cu(A)] -= rn;
          (*dydt)[cu(F)] += rn;
          if (nodes_[A].grouped) {
            double rm = ch.k0 * y[mu(A)];
            (*dydt)[mu(A)] -= rm;
            (*dydt)[mu(F)] += rm;
          }
        }
        if (jac) {
          (*jac)(cu(A), cu(A)) -= ch.k0;
          (*jac)(cu(F), cu(A)) += ch.k0;
          if (nodes_[A].grouped) {
            (*jac)(mu(A), mu(A)) -= ch.k0;
            (*jac)(mu(F), mu(A)) += ch.k0;
          }
        }
        break;
      }

      case Channel::Apply::ReservoirDetrap: {
        int res = reservoir_unknown(ch.reservoir_slot);
        int v_u = nodes_[ch.twin].u;
        if (dydt) {
          double r = ch.k0 * y[res];
          (*dydt)[res] -= r;
          (*dydt)[v_u] += r;
        }
        if (jac) {
          (*jac)(res, res) -= ch.k0;
          (*jac)(v_u, res) += ch.k0;
        }
        break;
      }
    }
  }

  // --- mean-free-path couplings ----------------------------------------------
  if (jac) {
    for (std::size_t s = 0; s < mover_nodes_.size(); ++s) {
      int yn = mover_nodes_[s];
      Cols cols;  // dLambda_y/dcol entries beyond simple sigma*N
      // partner count and size contributions
      // (columns can repeat; accumulation below handles it)
      std::array<std::pair<int, double>, 2> self_chain{};
      int n_self = 0;
      if (chain_on(yn)) {
        self_chain[n_self++] = {nodes_[yn].u, -dlambda_dn_[s] * ns_rep_[yn] / ns_creg_[yn]};
        self_chain[n_self++] = {nodes_[yn].u + 1, dlambda_dn_[s] / ns_creg_[yn]};
      }
      // flatten partner columns
      std::vector<std::pair<int, double>> dlam;
      dlam.reserve(mover_pairs_[s].size() * 2 + 2);
      for (int pid : mover_pairs_[s]) {
        const K1dPair& pr = k1d_pairs_[pid];
        int other = (pr.a == yn) ? pr.b : pr.a;
        double dso = (other == pr.a) ? pair_dsig_da_[pid] : pair_dsig_db_[pid];
        double sig = pair_sigma_[pid];
        double dn_col = sig;
        if (chain_on(other)) dn_col -= dso * ns_rep_[other];
        dlam.emplace_back(nodes_[other].u, dn_col);
        if (chain_on(other)) dlam.emplace_back(nodes_[other].u + 1, dso);
      }
      for (int i = 0; i < n_self; ++i) dlam.push_back(self_chain[i]);
      if (dlam.empty()) continue;
      for (int row = 0; row < n; ++row) {
        double a = lam_acc_(s, row);
        if (a == 0.0) continue;
        for (const auto& [col, v] : dlam) (*jac)(row, col) += a * v;
      }
    }
  }
}

}  // namespace wcd
