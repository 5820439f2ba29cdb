#include "wcd/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wcd {

GroupScheme GroupScheme::exact_only() {
  GroupScheme s;
  s.n_exact = std::numeric_limits<int>::max();
  s.ratio = 2.0;
  return s;
}

std::string GroupScheme::validate() const {
  if (n_exact < 1) return "grouping n_exact must be >= 1";
  if (!(ratio > 1.0)) return "grouping ratio must be > 1";
  return {};
}

std::vector<std::pair<int, int>> GroupScheme::bins(int min_size, int n_max) const {
  if (min_size < 1 || n_max < min_size)
    throw std::invalid_argument("GroupScheme::bins: bad size range");
  std::vector<std::pair<int, int>> out;
  int exact_hi = std::min(n_exact, n_max);
  for (int n = min_size; n <= exact_hi; ++n) out.emplace_back(n, n);
  int lo = exact_hi + 1;
  while (lo <= n_max) {
    int width = static_cast<int>(std::ceil(lo * (ratio - 1.0)));
    width = std::max(width, 1);
    int hi = std::min(lo + width - 1, n_max);
    out.emplace_back(lo, hi);
    lo = hi + 1;
  }
  return out;
}

double GroupRecon::integrate(double x1, double x2) const {
  x1 = std::max(x1, x_lo);
  x2 = std::min(x2, x_hi);
  if (x2 <= x1) return 0.0;
  double u1 = x1 - mid, u2 = x2 - mid;
  return c0 * (x2 - x1) + 0.5 * c1 * (u2 * u2 - u1 * u1);
}

double GroupRecon::integrate_mass(double x1, double x2) const {
  x1 = std::max(x1, x_lo);
  x2 = std::min(x2, x_hi);
  if (x2 <= x1) return 0.0;
  // integral of x (c0 + c1 (x - mid)) dx
  double a = c0 - c1 * mid;
  return 0.5 * a * (x2 * x2 - x1 * x1) + c1 * (x2 * x2 * x2 - x1 * x1 * x1) / 3.0;
}

GroupRecon GroupRecon::discrete(int lo, int hi, double count, double mass) {
  GroupRecon r;
  int w = hi - lo + 1;
  r.mid = 0.5 * (lo + hi);
  r.x_lo = lo - 0.5;
  r.x_hi = hi + 0.5;
  r.c0 = count / w;
  if (w > 1) {
    double s2 = w * (static_cast<double>(w) * w - 1.0) / 12.0;
    r.c1 = (mass - r.mid * count) / s2;
  }
  return r;
}

GroupRecon GroupRecon::continuous(int lo, int hi, double count, double mass,
                                  bool limit_slope) {
  GroupRecon r;
  double w = hi - lo + 1;
  r.mid = 0.5 * (lo + hi);
  r.x_lo = lo - 0.5;
  r.x_hi = hi + 0.5;
  r.c0 = count / w;
  if (w > 1.0) {
    r.c1 = (mass - r.mid * count) * 12.0 / (w * w * w);
    if (limit_slope && r.c0 > 0.0) {
      double c1_max = 2.0 * r.c0 / w;
      r.c1 = std::clamp(r.c1, -c1_max, c1_max);
    } else if (limit_slope) {
      r.c1 = 0.0;
    }
  }
  return r;
}

std::pair<double, double> project_group(const std::vector<double>& conc_by_size,
                                        int first_size, int lo, int hi) {
  double count = 0.0, mass = 0.0;
  for (int n = lo; n <= hi; ++n) {
    double c = conc_by_size.at(static_cast<std::size_t>(n - first_size));
    count += c;
    mass += static_cast<double>(n) * c;
  }
  return {count, mass};
}

}  // namespace wcd
