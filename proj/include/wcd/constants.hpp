#pragma once

namespace wcd {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kBoltzmannEv = 8.617333262e-5;  // eV/K
inline constexpr double kEvToJoule = 1.602176634e-19;   // J/eV

}  // namespace wcd
