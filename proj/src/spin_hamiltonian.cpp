#include "kramers/spin_hamiltonian.hpp"

#include <algorithm>
#include <cmath>

#include "kramers/errors.hpp"
#include "kramers/linalg/jacobi.hpp"
#include "kramers/physics/constants.hpp"
#include "kramers/physics/units.hpp"
#include "kramers/simd/kernels.hpp"

namespace kramers {

void SpinSystem::validate() const {
  if (!(g > 0.0)) throw DomainError("g must be positive");
  if (!(nuclear_spin >= 0.0) || std::abs(2.0 * nuclear_spin - std::round(2.0 * nuclear_spin)) > 1e-12)
    throw DomainError("nuclear spin must be a non-negative half-integer");
  if (!(odd_abundance >= 0.0 && odd_abundance <= 1.0))
    throw DomainError("odd isotope abundance must lie in [0, 1]");
  if (!(line_fwhm_T > 0.0)) throw DomainError("line FWHM must be positive");
  if (!std::isfinite(hyperfine_Hz)) throw DomainError("hyperfine constant must be finite");
}

int SpinSystem::nuclear_multiplicity() const {
  return static_cast<int>(std::lround(2.0 * nuclear_spin)) + 1;
}

std::vector<ResonanceLine> resonance_fields_perturbative(const SpinSystem& sys,
                                                         double frequency_Hz, int order) {
  sys.validate();
  if (!(frequency_Hz > 0.0)) throw DomainError("microwave frequency must be positive");
  if (order < 1 || order > 2) throw DomainError("perturbation order must be 1 or 2");
  const double b0 = resonance_field_T(frequency_Hz, sys.g);
  if (sys.nuclear_spin == 0.0) return {{0.0, b0}};

  const double i = sys.nuclear_spin;
  const double a_field = sys.hyperfine_Hz * constants::h / (sys.g * constants::mu_B);
  std::vector<ResonanceLine> lines;
  for (int k = 0; k < sys.nuclear_multiplicity(); ++k) {
    const double m = i - k;
    double b = b0 - a_field * m;
    if (order == 2) b -= a_field * a_field / (2.0 * b0) * (i * (i + 1.0) - m * m);
    lines.push_back({m, b});
  }
  return lines;
}

Eigen::MatrixXcd spin_hamiltonian_matrix(const SpinSystem& sys, double field_T) {
  sys.validate();
  const int nm = sys.nuclear_multiplicity();
  const double i = sys.nuclear_spin;
  const double nu_e = larmor_hz(field_T, sys.g);
  const double a = sys.hyperfine_Hz;
  auto index = [nm](int s, int k) { return s * nm + k; };  // s=0: m_S=+1/2

  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2 * nm, 2 * nm);
  for (int s = 0; s < 2; ++s) {
    const double ms = s == 0 ? 0.5 : -0.5;
    for (int k = 0; k < nm; ++k) {
      const double m = i - k;
      h(index(s, k), index(s, k)) = nu_e * ms + a * ms * m;
    }
  }
  // (A/2)(S+ I- + S- I+): <+1/2, m-1| S+ I- |-1/2, m> = sqrt(I(I+1) - m(m-1))
  for (int k = 0; k + 1 < nm; ++k) {
    const double m = i - k;
    const double amp = 0.5 * a * std::sqrt(i * (i + 1.0) - m * (m - 1.0));
    h(index(0, k + 1), index(1, k)) = amp;
    h(index(1, k), index(0, k + 1)) = amp;
  }
  return h;
}

ExactLevels exact_levels(const SpinSystem& sys, double field_T) {
  const Eigen::MatrixXcd h = spin_hamiltonian_matrix(sys, field_T);
  const auto eig = linalg::jacobi_eigen(h, 1e-13, 64);
  const int nm = sys.nuclear_multiplicity();
  const int dim = 2 * nm;

  // Label each eigenstate by its dominant product-basis component.
  std::vector<int> state_of_basis(static_cast<std::size_t>(dim), -1);
  for (int col = 0; col < dim; ++col) {
    Eigen::Index row = 0;
    eig.vectors.col(col).cwiseAbs2().maxCoeff(&row);
    if (state_of_basis[static_cast<std::size_t>(row)] != -1)
      throw NumericalError("exact_levels: eigenstates too mixed to label at this field");
    state_of_basis[static_cast<std::size_t>(row)] = col;
  }

  ExactLevels out;
  out.energies_Hz = eig.values;
  out.sweeps = eig.sweeps;
  for (int k = 0; k < nm; ++k) {
    const int up = state_of_basis[static_cast<std::size_t>(k)];
    const int down = state_of_basis[static_cast<std::size_t>(nm + k)];
    out.transitions.push_back({sys.nuclear_spin - k, eig.values[static_cast<std::size_t>(up)] -
                                                         eig.values[static_cast<std::size_t>(down)],
                               down, up});
  }
  return out;
}

namespace {

// Illinois-modified regula falsi on a sign-changing bracket.
template <class F>
double find_root(F f, double lo, double hi) {
  double flo = f(lo), fhi = f(hi);
  if (flo * fhi > 0.0) throw NumericalError("resonance field not bracketed");
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    const double x = (lo * fhi - hi * flo) / (fhi - flo);
    const double fx = f(x);
    if (fx == 0.0 || std::abs(hi - lo) < 1e-16 * std::abs(x)) return x;
    if (fx * fhi > 0.0) {
      hi = x;
      fhi = fx;
      if (side == -1) flo *= 0.5;
      side = -1;
    } else {
      lo = x;
      flo = fx;
      if (side == 1) fhi *= 0.5;
      side = 1;
    }
    if (std::abs(hi - lo) < 4e-16 * std::abs(x)) return x;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<ResonanceLine> resonance_fields_exact(const SpinSystem& sys, double frequency_Hz) {
  if (!(frequency_Hz > 0.0)) throw DomainError("microwave frequency must be positive");
  const auto guess = resonance_fields_perturbative(sys, frequency_Hz, 2);
  const double b0 = resonance_field_T(frequency_Hz, sys.g);
  const double a_field = std::abs(sys.hyperfine_Hz) * constants::h / (sys.g * constants::mu_B);
  std::vector<ResonanceLine> out;
  for (std::size_t k = 0; k < guess.size(); ++k) {
    auto detuning = [&](double b) {
      return exact_levels(sys, b).transitions[k].frequency_Hz - frequency_Hz;
    };
    const double half_width = std::max(1e-3 * b0, 0.5 * a_field);
    out.push_back({guess[k].m_I,
                   find_root(detuning, guess[k].field_T - half_width, guess[k].field_T + half_width)});
  }
  return out;
}

EprSpectrum synthesize_epr_spectrum(const SpinSystem& sys, double frequency_Hz,
                                    const FieldRange& range) {
  sys.validate();
  if (!(range.hi_T > range.lo_T) || range.points < 2) throw DomainError("invalid field range");

  EprSpectrum out;
  const double b0 = resonance_field_T(frequency_Hz, sys.g);
  out.registry.push_back({"even", 0.0, b0, 1.0 - sys.odd_abundance});
  if (sys.nuclear_spin > 0.0 && sys.odd_abundance > 0.0) {
    const double w = sys.odd_abundance / sys.nuclear_multiplicity();
    for (const auto& line : resonance_fields_perturbative(sys, frequency_Hz, 2))
      out.registry.push_back({"odd", line.m_I, line.field_T, w});
  }
  for (const auto& line : out.registry)
    if (line.field_T < range.lo_T || line.field_T > range.hi_T)
      out.warnings.push_back("line " + line.isotope + " m_I=" + std::to_string(line.m_I) +
                             " at " + std::to_string(line.field_T * 1e3) +
                             " mT lies outside the swept range");

  const double sigma_mT = sys.line_fwhm_T * 1e3 / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  std::vector<double> centers, heights;
  for (const auto& line : out.registry) {
    if (line.weight <= 0.0) continue;
    centers.push_back(line.field_T * 1e3);
    heights.push_back(line.weight / (sigma_mT * std::sqrt(2.0 * constants::pi)));
  }
  out.field_mT.resize(static_cast<std::size_t>(range.points));
  const double step = (range.hi_T - range.lo_T) * 1e3 / (range.points - 1);
  for (int k = 0; k < range.points; ++k)
    out.field_mT[static_cast<std::size_t>(k)] = range.lo_T * 1e3 + k * step;
  out.intensity.assign(out.field_mT.size(), 0.0);
  simd::gaussian_sum(out.field_mT, centers, heights, 1.0 / (2.0 * sigma_mT * sigma_mT),
                     out.intensity);
  return out;
}

double odd_isotope_signal_share(const SpinSystem& sys) {
  sys.validate();
  if (sys.nuclear_spin == 0.0) return 0.0;
  const double per_line = sys.odd_abundance / sys.nuclear_multiplicity();
  return per_line / ((1.0 - sys.odd_abundance) + per_line);
}

int count_local_maxima(std::span<const double> y, double floor_fraction) {
  if (y.size() < 3) return 0;
  const double peak = *std::max_element(y.begin(), y.end());
  int count = 0;
  for (std::size_t k = 1; k + 1 < y.size(); ++k)
    if (y[k] > y[k - 1] && y[k] > y[k + 1] && y[k] > floor_fraction * peak) ++count;
  return count;
}

}  // namespace kramers
