#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace kramers {

/// Effective spin-1/2 with isotropic g, plus one odd isotope carrying a
/// nuclear spin coupled by an isotropic hyperfine interaction A S.I.
struct SpinSystem {
  double g = 6.828;
  double hyperfine_Hz = 75e6;   // not measured; a scenario input
  double nuclear_spin = 3.5;    // of the odd isotope; 0 disables hyperfine
  double odd_abundance = 0.23;  // remaining 1 - odd_abundance has I = 0
  double line_fwhm_T = 2.57e-3;

  void validate() const;
  int nuclear_multiplicity() const;  // 2I + 1
};

struct ResonanceLine {
  double m_I;
  double field_T;
};

/// Resonance fields at fixed microwave frequency from the Zeeman term plus
/// hyperfine corrections up to `order` (1 or 2):
///   B(m) = B0 - a m - a^2/(2 B0) [I(I+1) - m^2],  a = A h / (g mu_B).
/// For I = 0 a single line at B0 is returned.
std::vector<ResonanceLine> resonance_fields_perturbative(const SpinSystem& sys,
                                                         double frequency_Hz, int order = 2);

struct Transition {
  double m_I;
  double frequency_Hz;
  int lower;  // indices into ExactLevels::energies_Hz
  int upper;
};

struct ExactLevels {
  std::vector<double> energies_Hz;  // ascending
  std::vector<Transition> transitions;  // Delta m_I = 0 electron flips, m_I descending
  int sweeps = 0;
};

/// Spin Hamiltonian H/h in the |m_S, m_I> product basis, m_S = +1/2 block
/// first, m_I descending within each block.
Eigen::MatrixXcd spin_hamiltonian_matrix(const SpinSystem& sys, double field_T);

/// Exact eigenvalues via cyclic Jacobi, with the electron-flip transitions
/// identified by the dominant product-basis component of each eigenvector.
ExactLevels exact_levels(const SpinSystem& sys, double field_T);

/// Resonance fields from the exact levels, found by bracketed root search
/// of f_m(B) = frequency for every m_I.
std::vector<ResonanceLine> resonance_fields_exact(const SpinSystem& sys, double frequency_Hz);

struct EprLine {
  std::string isotope;  // "even" or "odd"
  double m_I;           // 0 for the even isotope
  double field_T;
  double weight;
};

struct FieldRange {
  double lo_T;
  double hi_T;
  int points = 2001;
};

struct EprSpectrum {
  std::vector<double> field_mT;
  std::vector<double> intensity;  // per mT; integrates to the sum of weights
  std::vector<EprLine> registry;
  std::vector<std::string> warnings;
};

/// Echo-detected field sweep: one area-normalised Gaussian per resonance,
/// even isotope weighted (1 - odd_abundance), each hyperfine line
/// odd_abundance / (2I + 1).
EprSpectrum synthesize_epr_spectrum(const SpinSystem& sys, double frequency_Hz,
                                    const FieldRange& range);

/// Share of the echo at the even-isotope field that comes from one
/// coincident hyperfine line.
double odd_isotope_signal_share(const SpinSystem& sys);

/// Strict interior local maxima above `floor_fraction` of the global maximum.
int count_local_maxima(std::span<const double> y, double floor_fraction = 1e-6);

}  // namespace kramers
