#pragma once

#include <numbers>

// CODATA 2018 values, SI units.
namespace kramers::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double c = 299792458.0;                  // m/s
inline constexpr double h = 6.62607015e-34;               // J s
inline constexpr double hbar = h / (2.0 * pi);            // J s
inline constexpr double k_B = 1.380649e-23;              // J/K
inline constexpr double e = 1.602176634e-19;              // C
inline constexpr double mu_B = 9.2740100783e-24;          // J/T
inline constexpr double mu_0 = 1.25663706212e-6;          // N/A^2

}  // namespace kramers::constants
