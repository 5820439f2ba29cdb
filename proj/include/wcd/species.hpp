#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace wcd {

// Defect taxonomy for bcc tungsten under neutron irradiation.
//
// Interstitial side: single SIAs and di-/tri-SIA clusters migrate in 3-D;
// clusters with more than 3 SIAs exist as 1/2<111> loops (1-D migrants,
// free or trapped at impurity/transmutation traps), <100> loops and C15
// clusters (both immobile). Vacancy side: clusters of up to 4 vacancies
// migrate in 3-D; voids (5 and more vacancies) are immobile. Traps are
// sizeless, chemically inert species that only capture/release free
// 1/2<111> loops and mobile vacancies.
enum class DefectFamily : std::uint8_t {
  SiaPoint,
  Loop111,
  Loop100,
  C15,
  VacancyPoint,
  Void,
  TrapInterstitial,
  TrapTransmuted,
};

enum class MobilityClass : std::uint8_t { ThreeD, OneD, Immobile };

bool is_interstitial(DefectFamily f);  // counts +n in the signed defect balance
bool is_vacancy(DefectFamily f);       // counts -n
bool is_trap(DefectFamily f);
bool is_loop(DefectFamily f);          // disc geometry (circular loop)
bool is_sized(DefectFamily f);         // carries a size axis (traps do not)

// Smallest legal n for a sized family (SiaPoint 1, loops/C15 4, vacancies 1,
// voids 5). Traps report 1.
int family_min_size(DefectFamily f);

const char* family_name(DefectFamily f);
std::optional<DefectFamily> family_from_name(const std::string& name);

struct SpeciesKey {
  DefectFamily family = DefectFamily::SiaPoint;
  int n = 1;             // SIAs for interstitial families, vacancies otherwise
  bool trapped = false;  // legal only for Loop111

  friend auto operator<=>(const SpeciesKey&, const SpeciesKey&) = default;
};

std::string to_string(const SpeciesKey& key);

// Mobility classification: 3-D point defects, 1-D free 1/2<111> loops,
// everything else immobile. Trapped loops are immobile here; their residual
// trap-mediated diffusivity is handled in energetics.
MobilityClass mobility_class(const SpeciesKey& key);

// Dense, stable enumeration of every legal species up to the axis caps.
// Index layout: SiaPoint 1..3, Loop111 free 4..nI, Loop111 trapped 4..nI,
// Loop100 4..nI, C15 4..nI, VacancyPoint 1..4, Void 5..nV, then the two
// trap species. index()/key() form a bijection onto 0..size()-1.
class SpeciesSet {
 public:
  // Throws std::invalid_argument when either cap is below 5 (the loop and
  // void families would be empty).
  SpeciesSet(int n_max_interstitial, int n_max_vacancy);

  int size() const { return total_; }
  int n_max_interstitial() const { return n_max_i_; }
  int n_max_vacancy() const { return n_max_v_; }

  bool is_legal(const SpeciesKey& key) const;
  int index(const SpeciesKey& key) const;  // throws std::out_of_range if illegal
  std::optional<int> try_index(const SpeciesKey& key) const;
  SpeciesKey key(int index) const;         // throws std::out_of_range

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (int i = 0; i < total_; ++i) fn(key(i));
  }

 private:
  int n_max_i_;
  int n_max_v_;
  int loop_count_;  // species per loop-type axis (sizes 4..n_max_i)
  int void_count_;  // sizes 5..n_max_v
  int total_;
  // segment start offsets, in enumeration order
  int off_sia_, off_l111_free_, off_l111_trap_, off_l100_, off_c15_, off_vac_,
      off_void_, off_trap_i_, off_trap_t_;
};

}  // namespace wcd
