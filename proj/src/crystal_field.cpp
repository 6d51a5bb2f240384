#include "kramers/crystal_field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kramers/errors.hpp"
#include "kramers/physics/constants.hpp"
#include "kramers/physics/units.hpp"
#include "kramers/simd/kernels.hpp"

namespace kramers {

LevelScheme::LevelScheme(std::vector<Level> levels,
                         std::map<std::pair<std::string, std::string>, double> amplitudes)
    : levels_(std::move(levels)), amplitudes_(std::move(amplitudes)) {
  validate();
}

LevelScheme LevelScheme::measured_levels() {
  const double y1 = constants::h * constants::c / 1530.74e-9;
  return LevelScheme({{"Z1", Multiplet::Z, 0.0, 2},
                      {"Z2", Multiplet::Z, mev_to_joule(1.51), 2},
                      {"Y1", Multiplet::Y, y1, 2},
                      {"Y2", Multiplet::Y, y1 + mev_to_joule(1.13), 2}});
}

std::vector<Level> LevelScheme::levels(Multiplet m) const {
  std::vector<Level> out;
  std::copy_if(levels_.begin(), levels_.end(), std::back_inserter(out),
               [m](const Level& l) { return l.multiplet == m; });
  std::sort(out.begin(), out.end(),
            [](const Level& a, const Level& b) { return a.energy_J < b.energy_J; });
  return out;
}

const Level& LevelScheme::level(const std::string& label) const {
  for (const auto& l : levels_)
    if (l.label == label) return l;
  throw DomainError("no level labelled '" + label + "'");
}

double LevelScheme::amplitude(const std::string& y_label, const std::string& z_label) const {
  const auto it = amplitudes_.find({y_label, z_label});
  return it == amplitudes_.end() ? 1.0 : it->second;
}

void LevelScheme::set_amplitude(const std::string& y_label, const std::string& z_label, double value) {
  if (!(value >= 0.0)) throw DomainError("transition amplitude must be non-negative");
  amplitudes_[{y_label, z_label}] = value;
}

void LevelScheme::validate() const {
  for (auto m : {Multiplet::Z, Multiplet::Y}) {
    // Declaration order must already be ascending in energy.
    double previous = -INFINITY;
    for (const auto& l : levels_) {
      if (l.multiplet != m) continue;
      if (!(l.energy_J > previous))
        throw DomainError("level energies must increase strictly within a multiplet (at " + l.label + ")");
      previous = l.energy_J;
    }
  }
  for (const auto& l : levels_) {
    if (l.degeneracy != 2 && l.degeneracy != 4)
      throw DomainError("degeneracy of " + l.label + " must be 2 or 4");
    if (l.label == "Z1" && l.energy_J != 0.0) throw DomainError("Z1 must sit at zero energy");
  }
  for (const auto& [key, value] : amplitudes_)
    if (!(value >= 0.0)) throw DomainError("transition amplitude must be non-negative");
}

void MaterialSample::validate() const {
  if (!(cation_density_m3 > 0.0)) throw DomainError("cation density must be positive");
  if (!(dopant_ppm >= 0.0)) throw DomainError("dopant concentration must be non-negative");
  if (!isotopes.empty()) {
    double sum = 0.0;
    for (const auto& iso : isotopes) {
      if (!(iso.abundance >= 0.0)) throw DomainError("isotope abundance must be non-negative");
      sum += iso.abundance;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DomainError("isotope abundances must sum to 1");
  }
}

MaterialSample MaterialSample::ceria_default() {
  return {fluorite_cation_density(0.5411e-9), 3.0, {{"even", 0.77, 0.0}, {"Er167", 0.23, 3.5}}};
}

double fluorite_cation_density(double lattice_constant_m, int cations_per_cell) {
  if (!(lattice_constant_m > 0.0) || cations_per_cell <= 0)
    throw DomainError("lattice constant and cation count must be positive");
  return cations_per_cell / std::pow(lattice_constant_m, 3);
}

std::vector<Population> boltzmann_populations(const LevelScheme& scheme, Multiplet multiplet,
                                              double temperature_K) {
  if (!(temperature_K > 0.0)) throw DomainError("temperature must be positive");
  const auto levels = scheme.levels(multiplet);
  if (levels.empty()) throw DomainError("multiplet has no levels");
  const double kt = thermal_energy_J(temperature_K);
  const double e0 = levels.front().energy_J;
  std::vector<double> w;
  for (const auto& l : levels) w.push_back(l.degeneracy * std::exp(-(l.energy_J - e0) / kt));
  const double z = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<Population> out;
  for (std::size_t k = 0; k < levels.size(); ++k) out.push_back({levels[k].label, w[k] / z});
  return out;
}

PlSpectrum synthesize_pl_spectrum(const LevelScheme& scheme, double temperature_K,
                                  double resolution_Hz, const PlGrid& grid) {
  if (scheme.empty()) throw DomainError("empty level scheme");
  if (!(resolution_Hz > 0.0)) throw DomainError("spectral resolution must be positive");
  const auto ys = scheme.levels(Multiplet::Y);
  const auto zs = scheme.levels(Multiplet::Z);
  if (ys.empty() || zs.empty()) throw DomainError("scheme needs at least one Y and one Z level");

  const auto pops = boltzmann_populations(scheme, Multiplet::Y, temperature_K);
  PlSpectrum out;
  for (std::size_t i = 0; i < ys.size(); ++i)
    for (const auto& z : zs)
      out.lines.push_back({ys[i].label, z.label, (ys[i].energy_J - z.energy_J) / constants::h,
                           pops[i].fraction * scheme.amplitude(ys[i].label, z.label)});

  double fmin = INFINITY, fmax = -INFINITY;
  for (const auto& l : out.lines) {
    fmin = std::min(fmin, l.frequency_Hz);
    fmax = std::max(fmax, l.frequency_Hz);
  }
  fmin -= grid.margin_fwhm * resolution_Hz;
  fmax += grid.margin_fwhm * resolution_Hz;
  const double step = resolution_Hz / grid.points_per_fwhm;
  const auto n = static_cast<std::size_t>(std::ceil((fmax - fmin) / step)) + 1;

  // Work in GHz offsets from fmin so the kernel sees O(1..1e3) numbers.
  const double sigma_GHz = resolution_Hz * 1e-9 / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  std::vector<double> axis(n), centers, heights;
  for (std::size_t k = 0; k < n; ++k) axis[k] = static_cast<double>(k) * step * 1e-9;
  for (const auto& l : out.lines) {
    if (l.amplitude <= 0.0) continue;
    centers.push_back((l.frequency_Hz - fmin) * 1e-9);
    heights.push_back(l.amplitude / (sigma_GHz * 1e9 * std::sqrt(2.0 * constants::pi)));
  }
  out.intensity.assign(n, 0.0);
  simd::gaussian_sum(axis, centers, heights, 1.0 / (2.0 * sigma_GHz * sigma_GHz), out.intensity);
  out.frequency_Hz.resize(n);
  out.wavelength_nm.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.frequency_Hz[k] = fmin + static_cast<double>(k) * step;
    out.wavelength_nm[k] = constants::c / out.frequency_Hz[k] * 1e9;
  }
  return out;
}

double mean_ion_separation(const MaterialSample& sample) {
  sample.validate();
  if (!(sample.dopant_ppm > 0.0)) throw DomainError("dopant concentration must be positive");
  const double n = sample.dopant_ppm * 1e-6 * sample.cation_density_m3;
  return std::cbrt(3.0 / (4.0 * constants::pi * n));
}

}  // namespace kramers
