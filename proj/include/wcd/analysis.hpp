#pragma once

#include <vector>

#include "wcd/assembly.hpp"

namespace wcd {

inline constexpr double kPerM3ToPerCm3 = 1e-6;

struct SizeHistogram {
  DefectFamily family = DefectFamily::Loop111;
  double bin_width_nm = 0.5;
  double cutoff_nm = 0.0;
  std::vector<double> edges_nm;      // ascending bin edges, size() = bins + 1
  std::vector<double> density_cm3;   // cluster density per bin

  double total_density_cm3() const;
  double mean_diameter_nm() const;   // number-weighted over surviving bins
};

// Size-resolved density in diameter space (disc relation for loops, sphere
// for voids/C15). Grouped bins are apportioned with the intra-group linear
// distribution, slope-limited so the reconstruction stays nonnegative.
// Loop111 includes both free and trapped populations. Bins whose center lies
// below cutoff_nm are dropped when the cutoff is positive.
SizeHistogram size_histogram(const System& system, const Eigen::VectorXd& y,
                             DefectFamily family, double bin_width_nm, double cutoff_nm = 0.0);

struct InventoryRow {
  double time = 0.0;
  double dose = 0.0;
  // densities in cm^-3, diameters in nm
  double loop_density = 0.0;        // 1/2<111> free + trapped + <100>
  double loop111_density = 0.0;
  double loop100_density = 0.0;
  double c15_density = 0.0;
  double void_density = 0.0;
  double avg_loop_diameter = 0.0;
  double avg_loop111_diameter = 0.0;
  double avg_loop100_diameter = 0.0;
  double avg_void_diameter = 0.0;
  double max_loop111_diameter = 0.0;  // largest meaningfully populated bin
  double sias_in_loop111 = 0.0;       // sum n C, cm^-3
  double sias_in_loop100 = 0.0;
  double sias_in_c15 = 0.0;
  double c15_to_loop_sia_ratio = 0.0;
  double vacancies_in_voids = 0.0;
  double tran111_total = 0.0;  // SIA transfer rates, SIAs/m^3/s
  double tran100_total = 0.0;
  bool transfer_defined = false;
};

InventoryRow averages_and_inventories(const System& system, const StateVector& state);

struct TransferRates {
  bool defined = false;  // false when the loop reaction is toggled off
  std::vector<std::pair<double, double>> per_size_111;  // (size, SIAs/m^3/s)
  std::vector<std::pair<double, double>> per_size_100;
  double total_111 = 0.0;
  double total_100 = 0.0;
};

TransferRates transfer_rates(const System& system, const Eigen::VectorXd& y);

}  // namespace wcd
