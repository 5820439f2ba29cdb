#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <tuple>

#include "wcd/constants.hpp"
#include "wcd/kinetics.hpp"

using namespace wcd;

TEST_SUITE_BEGIN("kinetics");

namespace {
const MaterialParams kMat;
}

TEST_CASE("3-D/3-D absorption coefficient") {
  CHECK(absorb_3d3d(1e-12, 1e-12, 0.5e-9, 0.5e-9) ==
        doctest::Approx(4.0 * kPi * 2e-12 * 1e-9).epsilon(1e-12));
  CHECK(absorb_3d3d(1e-12, 1e-12, 0.5e-9, 0.5e-9) == doctest::Approx(2.513e-20).epsilon(1e-3));
  CHECK(absorb_3d3d(0.0, 0.0, 1e-9, 1e-9) == 0.0);
  CHECK(absorb_3d3d(3e-12, 5e-13, 2e-9, 7e-10) == absorb_3d3d(5e-13, 3e-12, 7e-10, 2e-9));
}

TEST_CASE("loop absorption of 3-D migrants") {
  double ry = 5e-9, rx = 0.2e-9, rd = 0.65e-9;
  double rc = rx + rd;
  double alpha = 1.0 / (1.0 + std::pow(ry / (3.0 * rc), 2));
  CHECK(alpha == doctest::Approx(0.206).epsilon(1e-2));
  double k = absorb_loop_3d(0.0, 1.0, ry, rx, rd);
  CHECK(k == doctest::Approx(55.6e-9).epsilon(1e-2));

  // vanishing loop radius recovers the spherical form
  double tiny = 1e-15;
  CHECK(absorb_loop_3d(0.0, 1.0, tiny, rx, rd) == doctest::Approx(4.0 * kPi * rc).epsilon(1e-4));

  // alpha stays in (0, 1] for positive radii
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.1e-9, 50e-9);
  for (int i = 0; i < 100; ++i) {
    double a = 1.0 / (1.0 + std::pow(u(rng) / (3.0 * (u(rng) + rd)), 2));
    CHECK(a > 0.0);
    CHECK(a <= 1.0);
  }
}

TEST_CASE("cross sections") {
  double sigma = cross_section(1e-9, 1e-9, 0.65e-9);
  CHECK(sigma == doctest::Approx(2.206e-17).epsilon(1e-3));
  CHECK(cross_section(1e-9, 2e-9, 0.65e-9) == cross_section(2e-9, 1e-9, 0.65e-9));
  CHECK(cross_section(2e-9, 1e-9, 0.0) > cross_section(1e-9, 1e-9, 0.0));

  // r_d joins only when a loop takes part
  SpeciesKey loop{DefectFamily::Loop111, 100, false};
  SpeciesKey v1{DefectFamily::VacancyPoint, 1, false};
  double r_loop = reaction_radius(loop, kMat), r_v = reaction_radius(v1, kMat);
  CHECK(cross_section(loop, v1, kMat) ==
        doctest::Approx(kPi * std::pow(r_loop + r_v + kMat.r_d, 2)));
  CHECK(cross_section(v1, v1, kMat) == doctest::Approx(kPi * std::pow(2 * r_v, 2)));
}

TEST_CASE("mean free path and 1-D rate") {
  double sig[] = {1e-18};
  double conc[] = {1e21};
  CHECK(mean_free_path(sig, conc, 0.0) == doctest::Approx(1e-3).epsilon(1e-12));
  double conc2[] = {2e21};
  CHECK(mean_free_path(sig, conc2, 0.0) == doctest::Approx(0.5e-3).epsilon(1e-12));
  CHECK(std::isinf(mean_free_path({}, {}, 0.0)));
  CHECK(react_1d(1e-13, 1e-18, std::numeric_limits<double>::infinity()) == 0.0);
  CHECK(react_1d(0.0, 1e-18, 1e-6) == 0.0);
  CHECK(react_1d(1e-13, 2.206e-17, 1e-6) == doctest::Approx(4.41e-24).epsilon(1e-2));
}

TEST_CASE("sink strengths") {
  SinkSet s = SinkSet::from(kMat, false);
  s.grain_radius = 1.5e-6;
  auto l3 = sink_strengths(MobilityClass::ThreeD, 1e-9, s);
  CHECK(l3.grain_boundary == doctest::Approx(14.4 / (1.5e-6 * 1.5e-6)).epsilon(1e-12));
  CHECK(l3.grain_boundary == doctest::Approx(6.4e12).epsilon(1e-3));
  CHECK(l3.surface == 0.0);  // bulk sample

  auto l1 = sink_strengths(MobilityClass::OneD, 1e-9, s);
  CHECK(l1.grain_boundary / l3.grain_boundary == doctest::Approx(15.0 / 14.4).epsilon(1e-12));
  double inv = kPi * (s.r_d + 1e-9) * s.rho_d;
  CHECK(l1.dislocation == doctest::Approx(2.0 * inv * inv).epsilon(1e-12));

  auto l0 = sink_strengths(MobilityClass::Immobile, 1e-9, s);
  CHECK(l0.dislocation == 0.0);

  SinkSet surf = s;
  surf.surface_enabled = true;
  surf.thickness = 4e-3;
  auto ls = sink_strengths(MobilityClass::ThreeD, 1e-9, surf);
  CHECK(ls.surface == doctest::Approx(2.0 / (4e-3 * 4e-3)).epsilon(1e-12));
  auto ls1 = sink_strengths(MobilityClass::OneD, 1e-9, surf);
  CHECK(ls1.surface == doctest::Approx(8.0 / (4e-3 * 4e-3)).epsilon(1e-12));

  // unphysically dense dislocations reject the logarithmic form
  SinkSet dense = s;
  dense.rho_d = 1e30;
  CHECK_THROWS_AS(sink_strengths(MobilityClass::ThreeD, 1e-9, dense), std::domain_error);
}

TEST_CASE("emission follows the binding energy") {
  MaterialParams m = kMat;
  PhysicsToggles toggles;

  // frozen lattice: g -> 0
  m.temperature = 20.0;
  CHECK(emission_rate({DefectFamily::Void, false, 6.0}, m, toggles) < 1e-200);

  // independent single-formula evaluation for a void of six vacancies at 873 K
  m.temperature = 873.0;
  double ef5 = 4.0 * kPi * std::pow(std::cbrt(3.0 * 5.0 * m.omega() / (4.0 * kPi)), 2) *
               m.gamma_surface / kEvToJoule;
  double ef6 = 4.0 * kPi * std::pow(std::cbrt(3.0 * 6.0 * m.omega() / (4.0 * kPi)), 2) *
               m.gamma_surface / kEvToJoule;
  double eb = 3.80 + ef5 - ef6;
  double d_v1 = 1.77e-6 * std::exp(-1.66 / (kBoltzmannEv * 873.0));
  double r5 = std::cbrt(3.0 * 5.0 * m.omega() / (4.0 * kPi));
  double r1 = std::cbrt(3.0 * m.omega() / (4.0 * kPi));
  double k5 = 4.0 * kPi * d_v1 * (r5 + r1);  // the n=5 void is immobile
  double expected = k5 / m.omega() * std::exp(-eb / (kBoltzmannEv * 873.0));
  CHECK(emission_rate({DefectFamily::Void, false, 6.0}, m, toggles) ==
        doctest::Approx(expected).epsilon(1e-12));

  // quasi-equilibrium stationarity: with C_mono Omega = exp(-E_b/kT) the
  // absorption and emission fluxes through a size balance exactly
  m.temperature = 700.0;
  double eb7 = binding_energy(BindingChannel::VacancyFromVoid, DefectFamily::Void, 7, m);
  double c_mono = std::exp(-eb7 / (kBoltzmannEv * m.temperature)) / m.omega();
  double r6 = reaction_radius(DefectFamily::Void, 6, m);
  double k6 = absorb_3d3d(0.0, diffusivity({DefectFamily::VacancyPoint, 1, false}, m), r6,
                          reaction_radius(DefectFamily::VacancyPoint, 1, m));
  double g7 = emission_rate({DefectFamily::Void, false, 7.0}, m, toggles);
  double c6 = 3e20, c7 = 3e20;  // equal occupation
  CHECK(k6 * c_mono * c6 == doctest::Approx(g7 * c7).epsilon(1e-12));
}

namespace {

// signed defect count of one species (interstitials positive)
double signed_count(const SpeciesSet& set, int idx) {
  SpeciesKey k = set.key(idx);
  if (is_trap(k.family)) return 0.0;
  return is_interstitial(k.family) ? k.n : -k.n;
}

struct ChannelKeyTuple {
  int kind, a, b, product;
  double weight;
  bool operator<(const ChannelKeyTuple& o) const {
    return std::tie(kind, a, b, product, weight) <
           std::tie(o.kind, o.a, o.b, o.product, o.weight);
  }
};

std::set<ChannelKeyTuple> channel_set(const std::vector<ReactionChannel>& chans) {
  std::set<ChannelKeyTuple> out;
  for (const auto& c : chans)
    out.insert({static_cast<int>(c.kind), c.a, c.b, c.product, c.weight});
  return out;
}

}  // namespace

TEST_CASE("network topology") {
  SpeciesSet set(20, 20);
  PhysicsToggles toggles;
  auto channels = build_channels(set, kMat, toggles);
  REQUIRE(!channels.empty());

  SUBCASE("every channel conserves the signed defect count") {
    for (const auto& ch : channels) {
      if (ch.kind == ChannelKind::SinkLoss) continue;  // exported to the sink ledger
      if (ch.clamped) continue;  // cap overflow, mass-exact only in the terminal group
      double in = signed_count(set, ch.a);
      if (ch.b >= 0 && ch.kind != ChannelKind::Trap) in += signed_count(set, ch.b);
      if (ch.kind == ChannelKind::Trap && ch.b >= 0) {
        // the trap survives; only the captured defect carries defect count
        in = signed_count(set, is_trap(set.key(ch.a).family) ? ch.b : ch.a);
      }
      double out = 0.0;
      if (ch.product >= 0) out += signed_count(set, ch.product);
      if (ch.emitted >= 0) out += signed_count(set, ch.emitted);
      if (ch.to_vacancy_reservoir)
        out += -set.key(is_trap(set.key(ch.a).family) ? ch.b : ch.a).n;
      CHECK(out == doctest::Approx(in).epsilon(1e-14));
    }
  }

  SUBCASE("monomer recombination annihilates") {
    int i1 = set.index({DefectFamily::SiaPoint, 1, false});
    int v1 = set.index({DefectFamily::VacancyPoint, 1, false});
    bool found = false;
    for (const auto& ch : channels) {
      if (ch.a == i1 && ch.b == v1) {
        found = true;
        CHECK(ch.product == -1);
        CHECK(ch.kind == ChannelKind::Absorb3D3D);
      }
    }
    CHECK(found);
  }

  SUBCASE("larger loop's Burgers vector wins") {
    int a = set.index({DefectFamily::Loop111, 10, false});
    int b = set.index({DefectFamily::Loop100, 4, false});
    int expect = set.index({DefectFamily::Loop111, 14, false});
    bool found = false;
    for (const auto& ch : channels) {
      if ((ch.a == a && ch.b == b) || (ch.a == b && ch.b == a)) {
        found = true;
        CHECK(ch.product == expect);
        CHECK(ch.kind == ChannelKind::React1D);
      }
    }
    CHECK(found);
  }

  SUBCASE("equal-size variant reaction branches 3/8 to <100>") {
    int a = set.index({DefectFamily::Loop111, 6, false});
    std::map<int, double> products;
    for (const auto& ch : channels)
      if (ch.a == a && ch.b == a && ch.kind == ChannelKind::React1D)
        products[ch.product] = ch.weight;
    REQUIRE(products.size() == 2);
    CHECK(products.at(set.index({DefectFamily::Loop100, 12, false})) ==
          doctest::Approx(3.0 / 8.0));
    CHECK(products.at(set.index({DefectFamily::Loop111, 12, false})) ==
          doctest::Approx(5.0 / 8.0));
  }

  SUBCASE("branch weights over one pair sum to one") {
    std::map<std::pair<int, int>, double> weight_sum;
    for (const auto& ch : channels) {
      if (ch.kind == ChannelKind::Absorb3D3D || ch.kind == ChannelKind::AbsorbLoop3D ||
          ch.kind == ChannelKind::React1D || ch.kind == ChannelKind::Trap)
        weight_sum[{ch.a, ch.b}] += ch.weight;
    }
    for (auto& [pair, w] : weight_sum) CHECK(w == doctest::Approx(1.0).epsilon(1e-14));
  }

  SUBCASE("rate coefficients are nonnegative under random parameters") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> temp(500.0, 1300.0);
    std::uniform_real_distribution<double> gamma(1.0, 6.0);
    for (int trial = 0; trial < 5; ++trial) {
      MaterialParams m = kMat;
      m.temperature = temp(rng);
      m.gamma_surface = gamma(rng);
      for (const auto& ch : build_channels(set, m, toggles)) {
        CHECK(ch.k >= 0.0);
        CHECK(ch.sigma >= 0.0);
        CHECK(std::isfinite(ch.k));
      }
    }
  }
}

TEST_CASE("loop-reaction toggle removes exactly the cross-loop channels") {
  SpeciesSet set(16, 16);
  PhysicsToggles on, off;
  off.loop_reaction = false;
  auto set_on = channel_set(build_channels(set, kMat, on));
  auto set_off = channel_set(build_channels(set, kMat, off));

  for (const auto& c : set_off) {
    if (set_on.count(c)) continue;
    // the only new channels are the reweighted equal-size variant reactions
    SpeciesKey a = set.key(c.a);
    CHECK(a.family == DefectFamily::Loop111);
    CHECK(c.a == c.b);
    CHECK(c.weight == 1.0);
  }
  int removed = 0;
  for (const auto& c : set_on) {
    if (set_off.count(c)) continue;
    ++removed;
    SpeciesKey a = set.key(c.a);
    SpeciesKey b = c.b >= 0 ? set.key(c.b) : a;
    bool cross = (a.family == DefectFamily::Loop111 && b.family == DefectFamily::Loop100) ||
                 (a.family == DefectFamily::Loop100 && b.family == DefectFamily::Loop111);
    bool equal_size_branch = a.family == DefectFamily::Loop111 && c.a == c.b;
    CHECK((cross || equal_size_branch));
  }
  CHECK(removed > 0);
}

TEST_CASE("trap channels") {
  SpeciesSet set(12, 12);
  PhysicsToggles toggles;
  auto channels = build_channels(set, kMat, toggles);

  int loop_free = set.index({DefectFamily::Loop111, 8, false});
  int loop_trap = set.index({DefectFamily::Loop111, 8, true});
  int trap_i = set.index({DefectFamily::TrapInterstitial, 1, false});
  int v2 = set.index({DefectFamily::VacancyPoint, 2, false});

  bool capture = false, detrap = false, vac_capture = false;
  for (const auto& ch : channels) {
    if (ch.kind == ChannelKind::Trap &&
        ((ch.a == trap_i && ch.b == loop_free) || (ch.a == loop_free && ch.b == trap_i))) {
      capture = true;
      CHECK(ch.product == loop_trap);
      CHECK(ch.law == RateLaw::K1d);
    }
    if (ch.kind == ChannelKind::Detrap && ch.a == loop_trap) {
      detrap = true;
      CHECK(ch.product == loop_free);
      double nu =
          kMat.nu_detrap * std::exp(-kMat.e_detrap / (kBoltzmannEv * kMat.temperature));
      CHECK(ch.k == doctest::Approx(nu).epsilon(1e-12));
    }
    if (ch.kind == ChannelKind::Trap && (ch.a == v2 || ch.b == v2) && ch.to_vacancy_reservoir)
      vac_capture = true;
  }
  CHECK(capture);
  CHECK(detrap);
  CHECK(vac_capture);

  PhysicsToggles no_traps;
  no_traps.traps = false;
  for (const auto& ch : build_channels(set, kMat, no_traps)) {
    CHECK(ch.kind != ChannelKind::Trap);
    CHECK(ch.kind != ChannelKind::Detrap);
  }
}

TEST_CASE("channel exclusions") {
  SpeciesSet set(12, 12);
  PhysicsToggles toggles;
  auto channels = build_channels(set, kMat, toggles);
  for (const auto& ch : channels) {
    SpeciesKey a = set.key(ch.a);
    SpeciesKey b = ch.b >= 0 ? set.key(ch.b) : SpeciesKey{DefectFamily::SiaPoint, 1, false};
    if (ch.b < 0) continue;
    // C15 reacts only with 3-D point migrants
    if (a.family == DefectFamily::C15)
      CHECK((b.family == DefectFamily::SiaPoint ||
             (b.family == DefectFamily::VacancyPoint && b.n == 1)));
    if (b.family == DefectFamily::C15)
      CHECK((a.family == DefectFamily::SiaPoint ||
             (a.family == DefectFamily::VacancyPoint && a.n == 1)));
    // V2..V4 join only void and monomer channels
    auto small_vac_ok = [&](const SpeciesKey& v, const SpeciesKey& other) {
      if (v.family != DefectFamily::VacancyPoint || v.n == 1) return true;
      return other.family == DefectFamily::Void || other.family == DefectFamily::SiaPoint ||
             is_trap(other.family) ||
             (other.family == DefectFamily::VacancyPoint && other.n == 1);
    };
    CHECK(small_vac_ok(a, b));
    CHECK(small_vac_ok(b, a));
  }
}

TEST_SUITE_END();
