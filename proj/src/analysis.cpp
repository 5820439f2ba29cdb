#include "wcd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace wcd {

double SizeHistogram::total_density_cm3() const {
  double sum = 0.0;
  for (double d : density_cm3) sum += d;
  return sum;
}

double SizeHistogram::mean_diameter_nm() const {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < density_cm3.size(); ++i) {
    double center = 0.5 * (edges_nm[i] + edges_nm[i + 1]);
    num += center * density_cm3[i];
    den += density_cm3[i];
  }
  return den > 0.0 ? num / den : 0.0;
}

SizeHistogram size_histogram(const System& system, const Eigen::VectorXd& y,
                             DefectFamily family, double bin_width_nm, double cutoff_nm) {
  if (!is_sized(family) || family == DefectFamily::SiaPoint ||
      family == DefectFamily::VacancyPoint)
    throw std::invalid_argument("size_histogram: family has no extended-size axis");
  if (!(bin_width_nm > 0.0)) throw std::invalid_argument("size_histogram: bin width must be > 0");

  const MaterialParams& p = system.params();
  const auto& nodes = system.nodes();

  // histogram extent: largest populated bin
  double d_max = 0.0;
  const double tiny = 1e-10;  // clusters/m^3
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& nd = nodes[i];
    if (nd.family != family) continue;
    if (system.bin_count(y, static_cast<int>(i)) <= tiny) continue;
    double hi_n = nd.grouped
                      ? std::max(static_cast<double>(nd.hi),
                                 system.bin_mean_size(y, static_cast<int>(i)))
                      : static_cast<double>(nd.hi);
    d_max = std::max(d_max, diameter_nm(family, hi_n + 0.5, p));
  }
  if (d_max <= 0.0) d_max = bin_width_nm;
  std::size_t n_bins = static_cast<std::size_t>(std::ceil(d_max / bin_width_nm));
  n_bins = std::clamp<std::size_t>(n_bins, 1, 100000);

  SizeHistogram h;
  h.family = family;
  h.bin_width_nm = bin_width_nm;
  h.cutoff_nm = cutoff_nm;
  h.edges_nm.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) h.edges_nm[i] = i * bin_width_nm;
  h.density_cm3.assign(n_bins, 0.0);

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& nd = nodes[i];
    if (nd.family != family) continue;
    double count = system.bin_count(y, static_cast<int>(i));
    if (count <= 0.0) continue;
    if (!nd.grouped) {
      double d = diameter_nm(family, nd.lo, p);
      std::size_t bin = std::min(static_cast<std::size_t>(d / bin_width_nm), n_bins - 1);
      h.density_cm3[bin] += count * kPerM3ToPerCm3;
      continue;
    }
    double mass = system.bin_mass(y, static_cast<int>(i));
    GroupRecon recon = GroupRecon::continuous(nd.lo, nd.hi, count, mass, true);
    // overlap each diameter bin with the group's continuous size support
    double n_lo = nd.lo - 0.5, n_hi = nd.hi + 0.5;
    std::size_t b0 = std::min(
        static_cast<std::size_t>(diameter_nm(family, std::max(n_lo, 1.0), p) / bin_width_nm),
        n_bins - 1);
    for (std::size_t b = b0; b < n_bins; ++b) {
      double n1 = size_from_diameter_nm(family, h.edges_nm[b], p);
      double n2 = size_from_diameter_nm(family, h.edges_nm[b + 1], p);
      double c = recon.integrate(std::max(n1, n_lo), std::min(n2, n_hi));
      if (c > 0.0) h.density_cm3[b] += c * kPerM3ToPerCm3;
      if (n2 >= n_hi) break;
    }
  }

  if (cutoff_nm > 0.0) {
    for (std::size_t b = 0; b < n_bins; ++b) {
      double center = 0.5 * (h.edges_nm[b] + h.edges_nm[b + 1]);
      if (center < cutoff_nm) h.density_cm3[b] = 0.0;
    }
  }
  return h;
}

namespace {

struct FamilyStats {
  double density = 0.0;   // m^-3
  double mass = 0.0;      // defects m^-3
  double d_sum = 0.0;     // density-weighted diameter
  double d_max = 0.0;
};

FamilyStats family_stats(const System& system, const Eigen::VectorXd& y, DefectFamily family) {
  FamilyStats st;
  const auto& nodes = system.nodes();
  const MaterialParams& p = system.params();
  double total = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].family == family) total += system.bin_count(y, static_cast<int>(i));
  const double floor = std::max(total * 1e-6, 1e-10);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& nd = nodes[i];
    if (nd.family != family) continue;
    double c = system.bin_count(y, static_cast<int>(i));
    if (c <= 0.0) continue;
    double n_rep = system.bin_mean_size(y, static_cast<int>(i));
    double d = diameter_nm(family, n_rep, p);
    st.density += c;
    st.mass += system.bin_mass(y, static_cast<int>(i));
    st.d_sum += c * d;
    if (c > floor) st.d_max = std::max(st.d_max, d);
  }
  return st;
}

}  // namespace

InventoryRow averages_and_inventories(const System& system, const StateVector& state) {
  InventoryRow row;
  row.time = state.time;
  row.dose = state.dose;

  FamilyStats l111 = family_stats(system, state.y, DefectFamily::Loop111);
  FamilyStats l100 = family_stats(system, state.y, DefectFamily::Loop100);
  FamilyStats c15 = family_stats(system, state.y, DefectFamily::C15);
  FamilyStats voids = family_stats(system, state.y, DefectFamily::Void);

  row.loop111_density = l111.density * kPerM3ToPerCm3;
  row.loop100_density = l100.density * kPerM3ToPerCm3;
  row.c15_density = c15.density * kPerM3ToPerCm3;
  row.void_density = voids.density * kPerM3ToPerCm3;
  row.loop_density = row.loop111_density + row.loop100_density;

  double loops_total = l111.density + l100.density;
  row.avg_loop_diameter = loops_total > 0.0 ? (l111.d_sum + l100.d_sum) / loops_total : 0.0;
  row.avg_loop111_diameter = l111.density > 0.0 ? l111.d_sum / l111.density : 0.0;
  row.avg_loop100_diameter = l100.density > 0.0 ? l100.d_sum / l100.density : 0.0;
  row.avg_void_diameter = voids.density > 0.0 ? voids.d_sum / voids.density : 0.0;
  row.max_loop111_diameter = l111.d_max;

  row.sias_in_loop111 = l111.mass * kPerM3ToPerCm3;
  row.sias_in_loop100 = l100.mass * kPerM3ToPerCm3;
  row.sias_in_c15 = c15.mass * kPerM3ToPerCm3;
  double loop_sias = row.sias_in_loop111 + row.sias_in_loop100;
  row.c15_to_loop_sia_ratio = loop_sias > 0.0 ? row.sias_in_c15 / loop_sias : 0.0;
  row.vacancies_in_voids = voids.mass * kPerM3ToPerCm3;

  TransferRates tr = transfer_rates(system, state.y);
  row.transfer_defined = tr.defined;
  row.tran111_total = tr.total_111;
  row.tran100_total = tr.total_100;
  return row;
}

TransferRates transfer_rates(const System& system, const Eigen::VectorXd& y) {
  TransferRates out;
  if (!system.config().toggles.loop_reaction) return out;  // undefined, not zero
  out.defined = true;

  std::map<double, double> t111, t100;
  for (const auto& ex : system.loop_exchange_rates(y)) {
    if (ex.rate == 0.0) {
      t111.try_emplace(ex.n_111, 0.0);
      t100.try_emplace(ex.n_100, 0.0);
      continue;
    }
    if (ex.winner_111) {
      // the 1/2<111> loop absorbs the <100> loop and gains its SIAs
      t111[ex.n_111] += ex.rate * ex.n_100;
      t100[ex.n_100] -= ex.rate * ex.n_100;
    } else {
      t100[ex.n_100] += ex.rate * ex.n_111;
      t111[ex.n_111] -= ex.rate * ex.n_111;
    }
  }
  for (auto [n, r] : t111) {
    out.per_size_111.emplace_back(n, r);
    out.total_111 += r;
  }
  for (auto [n, r] : t100) {
    out.per_size_100.emplace_back(n, r);
    out.total_100 += r;
  }
  return out;
}

}  // namespace wcd
