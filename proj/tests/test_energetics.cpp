#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "wcd/constants.hpp"
#include "wcd/energetics.hpp"

using namespace wcd;

TEST_SUITE_BEGIN("energetics");

namespace {
const MaterialParams kMat;  // defaults at 673.15 K

double arrhenius(double d0, double em, double t) {
  return d0 * std::exp(-em / (kBoltzmannEv * t));
}
}  // namespace

TEST_CASE("point-defect diffusivities follow the mobility table") {
  MaterialParams m = kMat;
  m.temperature = 673.15;
  CHECK(diffusivity({DefectFamily::SiaPoint, 1, false}, m) ==
        doctest::Approx(arrhenius(9.981e-11, 0.165, 673.15)).epsilon(1e-12));
  CHECK(diffusivity({DefectFamily::SiaPoint, 1, false}, m) ==
        doctest::Approx(5.8e-12).epsilon(0.01));
  CHECK(diffusivity({DefectFamily::SiaPoint, 2, false}, m) ==
        doctest::Approx(arrhenius(8.648e-10, 0.222, 673.15)).epsilon(1e-12));
  CHECK(diffusivity({DefectFamily::SiaPoint, 3, false}, m) ==
        doctest::Approx(arrhenius(3.47e-11, 0.203, 673.15)).epsilon(1e-12));
  CHECK(diffusivity({DefectFamily::Void, 7, false}, m) == 0.0);
  CHECK(diffusivity({DefectFamily::Loop100, 12, false}, m) == 0.0);
  CHECK(diffusivity({DefectFamily::C15, 12, false}, m) == 0.0);

  // V1 at 1.77e-6 m^2/s prefactor; V2..V4 scale as 1/n at the same barrier
  CHECK(mobility_law({DefectFamily::VacancyPoint, 1, false}, m).d0 ==
        doctest::Approx(1.77e-6));
  CHECK(mobility_law({DefectFamily::VacancyPoint, 3, false}, m).d0 ==
        doctest::Approx(1.77e-6 / 3.0));
  CHECK(mobility_law({DefectFamily::VacancyPoint, 4, false}, m).em == doctest::Approx(1.66));

  // free loops: D0(I1)/sqrt(n) with a 0.1 eV barrier
  auto loop16 = mobility_law({DefectFamily::Loop111, 16, false}, m);
  CHECK(loop16.d0 == doctest::Approx(9.981e-11 / 4.0).epsilon(1e-12));
  CHECK(loop16.em == doctest::Approx(0.1));
}

TEST_CASE("diffusivity grows with temperature") {
  MaterialParams m = kMat;
  double prev = 0.0;
  for (double t = 300.0; t <= 1500.0; t += 100.0) {
    m.temperature = t;
    double d = diffusivity({DefectFamily::Loop111, 30, false}, m);
    CHECK(d > prev);
    prev = d;
  }
}

TEST_CASE("trap-mediated diffusivity") {
  MaterialParams m = kMat;
  // hop length for a 1 nm loop: lambda = (4 pi r r_t rho_t)^-1
  double n_for_1nm = size_from_diameter_nm(DefectFamily::Loop111, 2.0, m);
  double rho_t = 1e23;
  double lambda = 1.0 / (4.0 * kPi * 1e-9 * m.r_t() * rho_t);
  CHECK(lambda == doctest::Approx(1.94e-6).epsilon(0.01));
  double hop = m.nu_detrap * std::exp(-m.e_detrap / (kBoltzmannEv * m.temperature));
  CHECK(trap_mediated_diffusivity(n_for_1nm, m, rho_t) ==
        doctest::Approx(hop * lambda * lambda / 2.0).epsilon(1e-9));

  // strong pinning: dense traps shrink the hop length and the diffusivity
  CHECK(trap_mediated_diffusivity(n_for_1nm, m, 1e28) <
        1e-9 * trap_mediated_diffusivity(n_for_1nm, m, 1e23));
  CHECK_THROWS_AS(trap_mediated_diffusivity(n_for_1nm, m, 0.0), std::domain_error);

  // trapped loops expose the trap-mediated value through diffusivity()
  double d_trapped = diffusivity({DefectFamily::Loop111, 50, true}, m);
  double r50 = reaction_radius(DefectFamily::Loop111, 50, m);
  double lam50 = 1.0 / (4.0 * kPi * r50 * m.r_t() *
                        (m.trap_interstitial_density() + m.trap_transmuted_density));
  CHECK(d_trapped == doctest::Approx(hop * lam50 * lam50 / 2.0).epsilon(1e-9));
}

TEST_CASE("loop formation-energy fit") {
  CHECK(formation_energy_loop(DefectFamily::Loop111, 1, kMat) ==
        doctest::Approx(14.12509).epsilon(1e-9));
  CHECK(formation_energy_loop(DefectFamily::Loop100, 1, kMat) ==
        doctest::Approx(5.4400).epsilon(1e-9));
  CHECK_THROWS_AS(formation_energy_loop(DefectFamily::Loop111, 0, kMat), std::domain_error);

  double prev111 = 0.0, prev100 = 0.0;
  for (int n = 1; n <= 10000; ++n) {
    double e111 = formation_energy_loop(DefectFamily::Loop111, n, kMat);
    double e100 = formation_energy_loop(DefectFamily::Loop100, n, kMat);
    CHECK(e111 > prev111);
    CHECK(e100 > prev100);
    // the fits cross between n = 4 and 5; in the loop regime 1/2<111> is cheaper
    if (n >= 5) CHECK(e111 < e100);
    prev111 = e111;
    prev100 = e100;
  }
}

TEST_CASE("void formation energy") {
  double r1 = std::cbrt(3.0 * kMat.omega() / (4.0 * kPi));
  CHECK(r1 == doctest::Approx(0.1556e-9).epsilon(1e-3));
  CHECK(reaction_radius(DefectFamily::Void, 1.0, kMat) == doctest::Approx(r1));
  // E ~ n^(2/3): E(8) = 4 E(1) exactly
  CHECK(formation_energy_void(8, kMat) ==
        doctest::Approx(4.0 * formation_energy_void(1, kMat)).epsilon(1e-12));
  CHECK(formation_energy_void(1, kMat) == doctest::Approx(6.27).epsilon(0.01));
  CHECK_THROWS_AS(formation_energy_void(0, kMat), std::domain_error);
}

TEST_CASE("binding energies") {
  // single SIA off a di-SIA cluster via the 1/2<111> fit
  double e2 = formation_energy_loop(DefectFamily::Loop111, 2, kMat);
  double expect = 9.46 + 14.12509 - e2;
  CHECK(binding_energy(BindingChannel::SiaFromSiaCluster, DefectFamily::Loop111, 2, kMat) ==
        doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(2.33).epsilon(0.01));

  // vacancy binding approaches the monomer formation energy for huge voids
  CHECK(binding_energy(BindingChannel::VacancyFromVoid, DefectFamily::Void, 1e9, kMat) ==
        doctest::Approx(3.80).epsilon(1e-3));
  double eb2 = binding_energy(BindingChannel::VacancyFromVoid, DefectFamily::Void, 2, kMat);
  CHECK(eb2 == doctest::Approx(3.80 + formation_energy_void(1, kMat) -
                               formation_energy_void(2, kMat)).epsilon(1e-12));

  // loops never shed spontaneously under the fit
  for (int n = 2; n <= 10000; n += (n < 100 ? 1 : 97)) {
    CHECK(binding_energy(BindingChannel::SiaFromSiaCluster, DefectFamily::Loop111, n, kMat) >
          0.0);
  }

  // diagnostic cross-type channels evaluate and stay finite
  CHECK(std::isfinite(
      binding_energy(BindingChannel::SiaToVoid, DefectFamily::Void, 10, kMat)));
  CHECK(std::isfinite(
      binding_energy(BindingChannel::VacancyToSiaCluster, DefectFamily::Loop111, 10, kMat)));
  CHECK_THROWS_AS(binding_energy(BindingChannel::SiaFromSiaCluster, DefectFamily::Loop111, 1,
                                 kMat),
                  std::domain_error);
}

TEST_CASE("reaction radii") {
  CHECK(reaction_radius(DefectFamily::Loop111, 100, kMat) ==
        doctest::Approx(1.354e-9).epsilon(1e-3));
  // strict monotonicity makes the diameter map invertible
  for (DefectFamily f : {DefectFamily::Loop111, DefectFamily::Void, DefectFamily::C15}) {
    double prev = 0.0;
    for (int n = family_min_size(f); n < 5000; n += 13) {
      double r = reaction_radius(f, n, kMat);
      CHECK(r > prev);
      prev = r;
      double d = diameter_nm(f, n, kMat);
      CHECK(size_from_diameter_nm(f, d, kMat) == doctest::Approx(n).epsilon(1e-10));
    }
  }
  CHECK(reaction_radius(DefectFamily::TrapInterstitial, 1.0, kMat) ==
        doctest::Approx(kMat.r_t()));
}

TEST_CASE("size derivatives match finite differences") {
  for (DefectFamily f : {DefectFamily::Loop111, DefectFamily::Void}) {
    for (double n : {7.0, 50.0, 1234.0}) {
      double h = n * 1e-6;
      double fd = (reaction_radius(f, n + h, kMat) - reaction_radius(f, n - h, kMat)) /
                  (2.0 * h);
      CHECK(d_reaction_radius_dn(f, n, kMat) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
  for (double n : {5.0, 80.0, 900.0}) {
    double h = n * 1e-6;
    double fd = (formation_energy_loop(DefectFamily::Loop100, n + h, kMat) -
                 formation_energy_loop(DefectFamily::Loop100, n - h, kMat)) /
                (2.0 * h);
    CHECK(d_formation_energy_loop_dn(DefectFamily::Loop100, n, kMat) ==
          doctest::Approx(fd).epsilon(1e-7));
    fd = (formation_energy_void(n + h, kMat) - formation_energy_void(n - h, kMat)) / (2.0 * h);
    CHECK(d_formation_energy_void_dn(n, kMat) == doctest::Approx(fd).epsilon(1e-7));
    MaterialParams m = kMat;
    double d = diffusivity(DefectFamily::Loop111, false, n, m);
    fd = (diffusivity(DefectFamily::Loop111, false, n + h, m) -
          diffusivity(DefectFamily::Loop111, false, n - h, m)) /
         (2.0 * h);
    CHECK(d_diffusivity_dn(DefectFamily::Loop111, false, n, d, m) ==
          doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_SUITE_END();
