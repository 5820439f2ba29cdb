#pragma once

#include <string>
#include <utility>
#include <vector>

namespace wcd {

// Size-axis reduction: exact bins up to n_exact, then geometrically widening
// groups. Each group carries two unknowns, the total density N and the total
// defect mass M, so projection conserves both sum C and sum n C exactly.
struct GroupScheme {
  int n_exact = 100;
  double ratio = 1.1;

  // Degenerate scheme: every size is an exact bin.
  static GroupScheme exact_only();

  bool has_groups(int n_max) const { return n_exact < n_max; }
  std::string validate() const;

  // Bin layout [lo, hi] covering min_size..n_max; exact section first, then
  // groups whose width grows by `ratio`. The last bin ends at n_max.
  std::vector<std::pair<int, int>> bins(int min_size, int n_max) const;
};

// Linear intra-group size distribution reconstructed from the two moments.
// The discrete form models per-size concentrations C(n) = c0 + c1 (n - mid)
// for integer n in [lo, hi]; the continuous form spreads the same moments
// over [lo - 1/2, hi + 1/2] for histogram apportionment (optionally
// slope-limited to stay nonnegative, which preserves N but not M).
struct GroupRecon {
  double c0 = 0.0;
  double c1 = 0.0;
  double mid = 0.0;
  double x_lo = 0.0;  // continuous support edges
  double x_hi = 0.0;

  double at(double x) const { return c0 + c1 * (x - mid); }
  // Count and mass integrals over [x1, x2] clipped to the support.
  double integrate(double x1, double x2) const;
  double integrate_mass(double x1, double x2) const;

  static GroupRecon discrete(int lo, int hi, double count, double mass);
  static GroupRecon continuous(int lo, int hi, double count, double mass, bool limit_slope);
};

// Projection of per-size concentrations onto (count, mass) group moments.
std::pair<double, double> project_group(const std::vector<double>& conc_by_size,
                                        int first_size, int lo, int hi);

}  // namespace wcd
