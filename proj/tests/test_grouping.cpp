#include <doctest.h>

#include <random>
#include <stdexcept>

#include "wcd/grouping.hpp"

using namespace wcd;

TEST_SUITE_BEGIN("grouping");

TEST_CASE("bin layout") {
  GroupScheme s;
  s.n_exact = 50;
  s.ratio = 1.2;
  auto bins = s.bins(4, 2000);
  REQUIRE(!bins.empty());
  // exact section
  for (int i = 0; i <= 46; ++i) {
    CHECK(bins[i].first == 4 + i);
    CHECK(bins[i].second == 4 + i);
  }
  // first group starts right after the exact section
  CHECK(bins[47].first == 51);
  // strictly increasing, gap-free, capped at n_max
  for (std::size_t i = 1; i < bins.size(); ++i) {
    CHECK(bins[i].first == bins[i - 1].second + 1);
    CHECK(bins[i].second >= bins[i].first);
  }
  CHECK(bins.back().second == 2000);

  GroupScheme bad;
  bad.ratio = 1.0;
  CHECK(!bad.validate().empty());
  GroupScheme exact = GroupScheme::exact_only();
  CHECK(exact.validate().empty());
  auto all = exact.bins(5, 40);
  CHECK(all.size() == 36);
  for (auto [lo, hi] : all) CHECK(lo == hi);
}

TEST_CASE("discrete reconstruction preserves both moments") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> uc(1e15, 1e22);
  for (int trial = 0; trial < 50; ++trial) {
    int lo = 10 + static_cast<int>(rng() % 100);
    int hi = lo + static_cast<int>(rng() % 40);
    double count = uc(rng);
    std::uniform_real_distribution<double> un(lo, hi);
    double mass = count * un(rng);
    GroupRecon r = GroupRecon::discrete(lo, hi, count, mass);
    double sum = 0.0, msum = 0.0;
    for (int n = lo; n <= hi; ++n) {
      sum += r.at(n);
      msum += n * r.at(n);
    }
    CHECK(sum == doctest::Approx(count).epsilon(1e-12));
    CHECK(msum == doctest::Approx(mass).epsilon(1e-12));
  }
}

TEST_CASE("continuous reconstruction integrates to the moments") {
  GroupRecon r = GroupRecon::continuous(20, 29, 5e20, 5e20 * 26.0, false);
  CHECK(r.integrate(19.5, 29.5) == doctest::Approx(5e20).epsilon(1e-12));
  CHECK(r.integrate_mass(19.5, 29.5) == doctest::Approx(5e20 * 26.0).epsilon(1e-12));
  // partial ranges add up
  double a = r.integrate(19.5, 24.0), b = r.integrate(24.0, 29.5);
  CHECK(a + b == doctest::Approx(5e20).epsilon(1e-12));

  // slope limiting keeps the density nonnegative and the count exact
  GroupRecon lim = GroupRecon::continuous(20, 29, 5e20, 5e20 * 29.4, true);
  CHECK(lim.integrate(19.5, 29.5) == doctest::Approx(5e20).epsilon(1e-12));
  for (double x = 19.5; x <= 29.5; x += 0.25) CHECK(lim.at(x) >= -1e-8 * 5e19);
}

TEST_CASE("projection of per-size concentrations") {
  std::vector<double> conc(30, 0.0);
  for (int i = 0; i < 30; ++i) conc[i] = (i + 1) * 1e18;
  auto [count, mass] = project_group(conc, 5, 10, 14);  // sizes 10..14 live at offsets 5..9
  double c_expect = 0.0, m_expect = 0.0;
  for (int n = 10; n <= 14; ++n) {
    c_expect += conc[n - 5];
    m_expect += n * conc[n - 5];
  }
  CHECK(count == doctest::Approx(c_expect));
  CHECK(mass == doctest::Approx(m_expect));
}

TEST_SUITE_END();
