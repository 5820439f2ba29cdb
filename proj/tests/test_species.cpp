#include <doctest.h>

#include <random>
#include <stdexcept>

#include "wcd/species.hpp"

using namespace wcd;

TEST_SUITE_BEGIN("species");

namespace {

// independent enumeration straight from the taxonomy rules
int count_species_by_rules(int n_max_i, int n_max_v) {
  int count = 3;                  // SIA point 1..3
  count += 3 * (n_max_i - 3);     // free 1/2<111>, <100>, C15 for 4..n_max_i
  count += n_max_i - 3;           // trapped 1/2<111>
  count += 4;                     // vacancies 1..4
  count += n_max_v - 4;           // voids 5..n_max_v
  count += 2;                     // traps
  return count;
}

}  // namespace

TEST_CASE("enumeration covers the taxonomy") {
  SpeciesSet set(6, 6);
  CHECK(set.size() == count_species_by_rules(6, 6));
  CHECK(set.is_legal({DefectFamily::SiaPoint, 3, false}));
  CHECK_FALSE(set.is_legal({DefectFamily::SiaPoint, 4, false}));
  CHECK(set.is_legal({DefectFamily::Loop111, 4, true}));
  CHECK_FALSE(set.is_legal({DefectFamily::Loop100, 4, true}));  // trapped only for 1/2<111>
  CHECK_FALSE(set.is_legal({DefectFamily::Void, 4, false}));
  CHECK(set.is_legal({DefectFamily::Void, 5, false}));
  CHECK_FALSE(set.is_legal({DefectFamily::Loop111, 7, false}));

  SpeciesSet smallest(5, 5);
  CHECK(smallest.size() == count_species_by_rules(5, 5));
  CHECK(smallest.is_legal({DefectFamily::Void, 5, false}));
  CHECK_FALSE(smallest.is_legal({DefectFamily::Void, 6, false}));

  SpeciesSet big(200, 200);
  CHECK(big.size() == 3 + 3 * 197 + 197 + 4 + 196 + 2);
  CHECK(big.size() == count_species_by_rules(200, 200));
}

TEST_CASE("maxima below 5 are configuration errors") {
  CHECK_THROWS_AS(SpeciesSet(4, 10), std::invalid_argument);
  CHECK_THROWS_AS(SpeciesSet(10, 4), std::invalid_argument);
}

TEST_CASE("index is a bijection") {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    int n_max_i = 5 + static_cast<int>(rng() % 300);
    int n_max_v = 5 + static_cast<int>(rng() % 300);
    SpeciesSet set(n_max_i, n_max_v);
    int traps = 0;
    for (int i = 0; i < set.size(); ++i) {
      SpeciesKey key = set.key(i);
      CHECK(set.index(key) == i);
      CHECK(set.is_legal(key));
      CHECK(key.n >= family_min_size(key.family));
      if (is_trap(key.family)) ++traps;
    }
    CHECK(traps == 2);
    CHECK(set.size() == count_species_by_rules(n_max_i, n_max_v));
  }
}

TEST_CASE("mobility classes") {
  CHECK(mobility_class({DefectFamily::SiaPoint, 3, false}) == MobilityClass::ThreeD);
  CHECK(mobility_class({DefectFamily::VacancyPoint, 4, false}) == MobilityClass::ThreeD);
  CHECK(mobility_class({DefectFamily::Void, 5, false}) == MobilityClass::Immobile);
  CHECK(mobility_class({DefectFamily::Loop111, 10, false}) == MobilityClass::OneD);
  CHECK(mobility_class({DefectFamily::Loop111, 10, true}) == MobilityClass::Immobile);
  CHECK(mobility_class({DefectFamily::Loop100, 10, false}) == MobilityClass::Immobile);
  CHECK(mobility_class({DefectFamily::C15, 10, false}) == MobilityClass::Immobile);
  CHECK(mobility_class({DefectFamily::TrapInterstitial, 1, false}) == MobilityClass::Immobile);
}

TEST_CASE("family name round trip") {
  for (auto f : {DefectFamily::SiaPoint, DefectFamily::Loop111, DefectFamily::Loop100,
                 DefectFamily::C15, DefectFamily::VacancyPoint, DefectFamily::Void,
                 DefectFamily::TrapInterstitial, DefectFamily::TrapTransmuted}) {
    auto back = family_from_name(family_name(f));
    REQUIRE(back.has_value());
    CHECK(*back == f);
  }
  CHECK_FALSE(family_from_name("nonsense").has_value());
}

TEST_SUITE_END();
