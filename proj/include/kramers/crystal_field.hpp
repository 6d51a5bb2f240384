#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace kramers {

enum class Multiplet { Z, Y };

struct Level {
  std::string label;  // Z1..Z5, Y1..Y5
  Multiplet multiplet;
  double energy_J;    // relative to Z1
  int degeneracy;     // 2 (Kramers doublet) or 4 (quartet)
};

/// Crystal-field levels of the ground (Z) and excited (Y) multiplets and
/// optional relative dipole strengths of the Y -> Z emission lines
/// (missing pairs default to 1).
class LevelScheme {
 public:
  LevelScheme() = default;
  LevelScheme(std::vector<Level> levels, std::map<std::pair<std::string, std::string>, double> amplitudes = {});

  /// The levels with measured energies: Z1, Z2 (+1.51 meV),
  /// Y1 at 1530.74 nm above Z1 and Y2 (+1.13 meV above Y1). Other levels
  /// must come from a scenario file.
  static LevelScheme measured_levels();

  const std::vector<Level>& levels() const { return levels_; }
  std::vector<Level> levels(Multiplet m) const;
  const Level& level(const std::string& label) const;
  double amplitude(const std::string& y_label, const std::string& z_label) const;
  void set_amplitude(const std::string& y_label, const std::string& z_label, double value);
  bool empty() const { return levels_.empty(); }

  /// Energies strictly increasing within each multiplet, Z1 at zero,
  /// degeneracy in {2, 4}, non-negative amplitudes.
  void validate() const;

 private:
  std::vector<Level> levels_;
  std::map<std::pair<std::string, std::string>, double> amplitudes_;
};

struct Isotope {
  std::string label;
  double abundance;
  double nuclear_spin;
};

struct MaterialSample {
  double cation_density_m3;
  double dopant_ppm;
  std::vector<Isotope> isotopes;

  void validate() const;
  /// Er-doped CeO2: fluorite cell a = 0.5411 nm with four cations, 3 ppm,
  /// natural Er (77 % I = 0 even isotopes, 23 % 167Er with I = 7/2).
  static MaterialSample ceria_default();
};

/// Cations per cubic metre of a fluorite-structure host.
double fluorite_cation_density(double lattice_constant_m, int cations_per_cell = 4);

struct Population {
  std::string label;
  double fraction;
};

/// Thermal occupation within one multiplet, proportional to
/// degeneracy * exp(-E / k_B T). Throws DomainError for T <= 0.
std::vector<Population> boltzmann_populations(const LevelScheme& scheme, Multiplet multiplet,
                                              double temperature_K);

struct PlLine {
  std::string upper;
  std::string lower;
  double frequency_Hz;
  double amplitude;  // population of the upper level times relative strength
};

struct PlSpectrum {
  std::vector<double> frequency_Hz;
  std::vector<double> wavelength_nm;
  std::vector<double> intensity;  // per Hz
  std::vector<PlLine> lines;
};

struct PlGrid {
  double points_per_fwhm = 10.0;
  double margin_fwhm = 6.0;
};

/// Emission from every thermally populated Y level to every Z level,
/// each line broadened by an area-normalised Gaussian of FWHM `resolution_Hz`.
PlSpectrum synthesize_pl_spectrum(const LevelScheme& scheme, double temperature_K,
                                  double resolution_Hz, const PlGrid& grid = {});

/// Wigner-Seitz radius (3 / (4 pi n))^(1/3) of the dopant density, metres.
double mean_ion_separation(const MaterialSample& sample);

}  // namespace kramers
