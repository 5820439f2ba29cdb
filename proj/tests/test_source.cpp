#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "wcd/source.hpp"
#include "wcd/species.hpp"

using namespace wcd;

TEST_SUITE_BEGIN("source");

namespace {
const MaterialParams kMat;
}

TEST_CASE("power-law normalization") {
  // direct summation
  double sum_i = 0.0;
  for (int n = 1; n <= 15; ++n) sum_i += std::pow(n, -1.2);
  CHECK(production_norm(2.2, 15) == doctest::Approx(sum_i).epsilon(1e-14));
  CHECK(sum_i == doctest::Approx(2.70).epsilon(0.01));

  ProductionSpec spec;
  double g_total = 1e21;
  CHECK(production_rate(1, ProductionAxis::Interstitial, spec, g_total) ==
        doctest::Approx(g_total / sum_i).epsilon(1e-12));
  CHECK(production_rate(0, ProductionAxis::Interstitial, spec, g_total) == 0.0);
  CHECK(production_rate(16, ProductionAxis::Interstitial, spec, g_total) == 0.0);
  CHECK(production_rate(20, ProductionAxis::Vacancy, spec, g_total) > 0.0);
  CHECK(production_rate(21, ProductionAxis::Vacancy, spec, g_total) == 0.0);
}

TEST_CASE("point-defect conservation") {
  ProductionSpec spec;
  double g_total = 3.7e20;
  for (auto axis : {ProductionAxis::Interstitial, ProductionAxis::Vacancy}) {
    int n_max = axis == ProductionAxis::Interstitial ? spec.n_max_interstitial
                                                     : spec.n_max_vacancy;
    double sum = 0.0;
    for (int n = 1; n <= n_max; ++n) sum += n * production_rate(n, axis, spec, g_total);
    CHECK(sum == doctest::Approx(g_total).epsilon(1e-12));
  }
}

TEST_CASE("cluster partition") {
  ProductionSpec spec;
  double g_total = 1e21;
  double g10 = production_rate(10, ProductionAxis::Interstitial, spec, g_total);

  SpeciesSet set(20, 25);
  auto g = production_vector(set, spec, g_total);
  CHECK(g[set.index({DefectFamily::C15, 10, false})] == doctest::Approx(0.05 * g10));
  CHECK(g[set.index({DefectFamily::Loop100, 10, false})] == doctest::Approx(0.01 * g10));
  CHECK(g[set.index({DefectFamily::Loop111, 10, false})] == doctest::Approx(0.94 * g10));
  CHECK(g[set.index({DefectFamily::SiaPoint, 2, false})] ==
        doctest::Approx(production_rate(2, ProductionAxis::Interstitial, spec, g_total)));
  CHECK(g[set.index({DefectFamily::Void, 18, false})] ==
        doctest::Approx(production_rate(18, ProductionAxis::Vacancy, spec, g_total)));
  CHECK(g[set.index({DefectFamily::Loop111, 10, true})] == 0.0);

  // both axes carry the full production when summed with their sizes
  double mass_i = 0.0, mass_v = 0.0;
  for (int i = 0; i < set.size(); ++i) {
    SpeciesKey k = set.key(i);
    if (is_trap(k.family)) continue;
    (is_interstitial(k.family) ? mass_i : mass_v) += k.n * g[i];
  }
  CHECK(mass_i == doctest::Approx(g_total).epsilon(1e-12));
  CHECK(mass_v == doctest::Approx(g_total).epsilon(1e-12));
}

TEST_CASE("dpa rate conversion") {
  double rate = dpa_to_rate(1.02, 186.0 * 86400.0, kMat);
  CHECK(rate == doctest::Approx(6.347e-8 * kMat.atomic_density()).epsilon(1e-3));
  CHECK(dpa_to_rate(1.06, 186.0 * 86400.0, kMat) ==
        doctest::Approx(6.60e-8 * kMat.atomic_density()).epsilon(1e-2));
  CHECK(dpa_to_rate(0.0, 100.0, kMat) == 0.0);
  CHECK_THROWS_AS(dpa_to_rate(1.0, 0.0, kMat), std::invalid_argument);
}

TEST_CASE("overlap spec validation") {
  OverlapSpec ov;
  CHECK(ov.validate().empty());
  ov.f_void = 1.5;
  CHECK(!ov.validate().empty());
  ov.f_void = 0.1;
  ov.f_ol = -1.0;
  CHECK(!ov.validate().empty());
}

TEST_CASE("overlap rate from a PKA spectrum") {
  PkaSpectrum s;
  s.bins = {{1e3, 1e-9}, {1e5, 2e-9}, {2e5, 1e-9}, {4e5, 5e-10}};
  double a = s.v_fragment_m3 / s.e_fragment_ev;
  double expect = kMat.atomic_density() * (1e-9 * a * 2e5 + 5e-10 * a * 4e5);
  CHECK(estimate_overlap_rate(s, kMat) == doctest::Approx(expect).epsilon(1e-12));

  // linearity in the bin rates
  PkaSpectrum s2 = s;
  for (auto& b : s2.bins) b.rate_per_atom *= 2.0;
  CHECK(estimate_overlap_rate(s2, kMat) ==
        doctest::Approx(2.0 * estimate_overlap_rate(s, kMat)).epsilon(1e-12));

  // below-threshold spectrum: zero rate plus a warning
  PkaSpectrum cold;
  cold.bins = {{1e3, 1e-9}, {1e4, 1e-9}};
  std::string warning;
  CHECK(estimate_overlap_rate(cold, kMat, &warning) == 0.0);
  CHECK(!warning.empty());
}

TEST_CASE("PKA spectrum file parsing") {
  const char* path = "pka_test_tmp.txt";
  {
    std::ofstream out(path);
    out << "# energy_eV rate_per_atom_per_s\n";
    out << "1.0e3 1.0e-9\n";
    out << "2.0e5 4.0e-10  # above the fragmentation threshold\n";
    out << "\n";
  }
  PkaSpectrum s = PkaSpectrum::load(path);
  REQUIRE(s.bins.size() == 2);
  CHECK(s.bins[1].energy_ev == doctest::Approx(2e5));
  std::remove(path);

  {
    std::ofstream out(path);
    out << "1.0e3 1.0e-9\n";
    out << "5.0e2 oops\n";
  }
  CHECK_THROWS_WITH_AS(PkaSpectrum::load(path),
                       doctest::Contains(":2"), std::runtime_error);
  std::remove(path);

  {
    std::ofstream out(path);
    out << "2.0e3 1.0e-9\n";
    out << "1.0e3 1.0e-9\n";  // not ascending
  }
  CHECK_THROWS_AS(PkaSpectrum::load(path), std::runtime_error);
  std::remove(path);
}

TEST_SUITE_END();
