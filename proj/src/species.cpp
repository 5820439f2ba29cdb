#include "wcd/species.hpp"

#include <stdexcept>

namespace wcd {

bool is_interstitial(DefectFamily f) {
  switch (f) {
    case DefectFamily::SiaPoint:
    case DefectFamily::Loop111:
    case DefectFamily::Loop100:
    case DefectFamily::C15:
      return true;
    default:
      return false;
  }
}

bool is_vacancy(DefectFamily f) {
  return f == DefectFamily::VacancyPoint || f == DefectFamily::Void;
}

bool is_trap(DefectFamily f) {
  return f == DefectFamily::TrapInterstitial || f == DefectFamily::TrapTransmuted;
}

bool is_loop(DefectFamily f) {
  return f == DefectFamily::Loop111 || f == DefectFamily::Loop100;
}

bool is_sized(DefectFamily f) { return !is_trap(f); }

int family_min_size(DefectFamily f) {
  switch (f) {
    case DefectFamily::SiaPoint:
    case DefectFamily::VacancyPoint:
      return 1;
    case DefectFamily::Loop111:
    case DefectFamily::Loop100:
    case DefectFamily::C15:
      return 4;
    case DefectFamily::Void:
      return 5;
    default:
      return 1;
  }
}

const char* family_name(DefectFamily f) {
  switch (f) {
    case DefectFamily::SiaPoint: return "sia";
    case DefectFamily::Loop111: return "loop111";
    case DefectFamily::Loop100: return "loop100";
    case DefectFamily::C15: return "c15";
    case DefectFamily::VacancyPoint: return "vacancy";
    case DefectFamily::Void: return "void";
    case DefectFamily::TrapInterstitial: return "trap_interstitial";
    case DefectFamily::TrapTransmuted: return "trap_transmuted";
  }
  return "?";
}

std::optional<DefectFamily> family_from_name(const std::string& name) {
  for (auto f : {DefectFamily::SiaPoint, DefectFamily::Loop111, DefectFamily::Loop100,
                 DefectFamily::C15, DefectFamily::VacancyPoint, DefectFamily::Void,
                 DefectFamily::TrapInterstitial, DefectFamily::TrapTransmuted}) {
    if (name == family_name(f)) return f;
  }
  return std::nullopt;
}

std::string to_string(const SpeciesKey& key) {
  std::string s = family_name(key.family);
  if (is_sized(key.family)) s += "(" + std::to_string(key.n) + ")";
  if (key.trapped) s += "[trapped]";
  return s;
}

MobilityClass mobility_class(const SpeciesKey& key) {
  switch (key.family) {
    case DefectFamily::SiaPoint:
    case DefectFamily::VacancyPoint:
      return MobilityClass::ThreeD;
    case DefectFamily::Loop111:
      return key.trapped ? MobilityClass::Immobile : MobilityClass::OneD;
    default:
      return MobilityClass::Immobile;
  }
}

SpeciesSet::SpeciesSet(int n_max_interstitial, int n_max_vacancy)
    : n_max_i_(n_max_interstitial), n_max_v_(n_max_vacancy) {
  if (n_max_i_ < 5 || n_max_v_ < 5) {
    throw std::invalid_argument(
        "SpeciesSet: axis caps must be >= 5 (loop/void families would be empty)");
  }
  loop_count_ = n_max_i_ - 3;  // sizes 4..n_max_i
  void_count_ = n_max_v_ - 4;  // sizes 5..n_max_v
  off_sia_ = 0;
  off_l111_free_ = off_sia_ + 3;
  off_l111_trap_ = off_l111_free_ + loop_count_;
  off_l100_ = off_l111_trap_ + loop_count_;
  off_c15_ = off_l100_ + loop_count_;
  off_vac_ = off_c15_ + loop_count_;
  off_void_ = off_vac_ + 4;
  off_trap_i_ = off_void_ + void_count_;
  off_trap_t_ = off_trap_i_ + 1;
  total_ = off_trap_t_ + 1;
}

bool SpeciesSet::is_legal(const SpeciesKey& key) const {
  if (key.trapped && key.family != DefectFamily::Loop111) return false;
  switch (key.family) {
    case DefectFamily::SiaPoint: return key.n >= 1 && key.n <= 3;
    case DefectFamily::Loop111:
    case DefectFamily::Loop100:
    case DefectFamily::C15: return key.n >= 4 && key.n <= n_max_i_;
    case DefectFamily::VacancyPoint: return key.n >= 1 && key.n <= 4;
    case DefectFamily::Void: return key.n >= 5 && key.n <= n_max_v_;
    case DefectFamily::TrapInterstitial:
    case DefectFamily::TrapTransmuted: return key.n == 1;
  }
  return false;
}

std::optional<int> SpeciesSet::try_index(const SpeciesKey& key) const {
  if (!is_legal(key)) return std::nullopt;
  switch (key.family) {
    case DefectFamily::SiaPoint: return off_sia_ + key.n - 1;
    case DefectFamily::Loop111:
      return (key.trapped ? off_l111_trap_ : off_l111_free_) + key.n - 4;
    case DefectFamily::Loop100: return off_l100_ + key.n - 4;
    case DefectFamily::C15: return off_c15_ + key.n - 4;
    case DefectFamily::VacancyPoint: return off_vac_ + key.n - 1;
    case DefectFamily::Void: return off_void_ + key.n - 5;
    case DefectFamily::TrapInterstitial: return off_trap_i_;
    case DefectFamily::TrapTransmuted: return off_trap_t_;
  }
  return std::nullopt;
}

int SpeciesSet::index(const SpeciesKey& key) const {
  auto idx = try_index(key);
  if (!idx) throw std::out_of_range("SpeciesSet::index: illegal key " + to_string(key));
  return *idx;
}

SpeciesKey SpeciesSet::key(int index) const {
  if (index < 0 || index >= total_) throw std::out_of_range("SpeciesSet::key: index out of range");
  if (index < off_l111_free_) return {DefectFamily::SiaPoint, index - off_sia_ + 1, false};
  if (index < off_l111_trap_) return {DefectFamily::Loop111, index - off_l111_free_ + 4, false};
  if (index < off_l100_) return {DefectFamily::Loop111, index - off_l111_trap_ + 4, true};
  if (index < off_c15_) return {DefectFamily::Loop100, index - off_l100_ + 4, false};
  if (index < off_vac_) return {DefectFamily::C15, index - off_c15_ + 4, false};
  if (index < off_void_) return {DefectFamily::VacancyPoint, index - off_vac_ + 1, false};
  if (index < off_trap_i_) return {DefectFamily::Void, index - off_void_ + 5, false};
  if (index == off_trap_i_) return {DefectFamily::TrapInterstitial, 1, false};
  return {DefectFamily::TrapTransmuted, 1, false};
}

}  // namespace wcd
