#include "kramers/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "kramers/errors.hpp"
#include "kramers/physics/constants.hpp"

namespace kramers {

void HomLinewidthParams::validate() const {
  if (!(gamma0_Hz >= 0.0 && alpha_linear_Hz_per_K >= 0.0 && alpha_orbach_Hz >= 0.0 && delta_E_J >= 0.0))
    throw DomainError("homogeneous-linewidth parameters must be non-negative");
}

double orbach_term(const HomLinewidthParams& p, double temperature_K) {
  if (!(temperature_K > 0.0)) throw DomainError("temperature must be positive");
  return p.alpha_orbach_Hz * std::exp(-p.delta_E_J / (constants::k_B * temperature_K));
}

double gamma_hom(const HomLinewidthParams& p, double temperature_K) {
  return p.gamma0_Hz + p.alpha_linear_Hz_per_K * temperature_K + orbach_term(p, temperature_K);
}

double linewidth_from_T2(double T2_s) {
  if (!(T2_s > 0.0)) throw DomainError("T2 must be positive");
  return 1.0 / (constants::pi * T2_s);
}

double T2_from_linewidth(double linewidth_Hz) {
  if (!(linewidth_Hz > 0.0)) throw DomainError("linewidth must be positive");
  return 1.0 / (constants::pi * linewidth_Hz);
}

void InstDiffusionParams::validate() const {
  if (!(g > 0.0)) throw DomainError("g must be positive");
  if (!(density_m3 >= 0.0)) throw DomainError("spin density must be non-negative");
  if (!(theta >= 0.0 && theta <= constants::pi + 1e-12)) throw DomainError("flip angle must lie in [0, pi]");
  if (!(T2_bath_s >= 0.0)) throw DomainError("bath T2 must be non-negative");
}

double inst_diffusion_constant(double g) {
  if (!(g > 0.0)) throw DomainError("g must be positive");
  const double prefactor = 8.0 * constants::pi * constants::pi / (9.0 * std::sqrt(3.0));
  return prefactor * (constants::mu_0 / (4.0 * constants::pi)) * g * g * constants::mu_B *
         constants::mu_B / constants::hbar;
}

double inst_diffusion_term(const InstDiffusionParams& p) {
  p.validate();
  const double s = std::sin(0.5 * p.theta);
  return inst_diffusion_constant(p.g) * p.density_m3 * s * s;
}

double inst_diffusion_rate(const InstDiffusionParams& p) {
  const double bath = p.T2_bath_s > 0.0 ? 1.0 / p.T2_bath_s : 0.0;
  return inst_diffusion_term(p) + bath;
}

double density_to_ppm(double density_m3, double cation_density_m3, double probed_fraction) {
  if (!(probed_fraction > 0.0 && probed_fraction <= 1.0))
    throw DomainError("probed fraction must lie in (0, 1]");
  if (!(cation_density_m3 > 0.0)) throw DomainError("cation density must be positive");
  if (!(density_m3 >= 0.0)) throw DomainError("spin density must be non-negative");
  return 1e6 * (density_m3 / probed_fraction) / cation_density_m3;
}

double probed_fraction(double line_fwhm_Hz, double pulse_bandwidth_Hz) {
  if (!(line_fwhm_Hz > 0.0 && pulse_bandwidth_Hz > 0.0))
    throw DomainError("linewidth and pulse bandwidth must be positive");
  return std::min(1.0, pulse_bandwidth_Hz / line_fwhm_Hz);
}

double rectangular_pulse_bandwidth(double duration_s, double factor) {
  if (!(duration_s > 0.0)) throw DomainError("pulse duration must be positive");
  return factor / duration_s;
}

void SpinT1Params::validate() const {
  if (!(A_o >= 0.0 && A_d >= 0.0 && R_o >= 0.0)) throw DomainError("relaxation rates must be non-negative");
  if (!(g > 0.0)) throw DomainError("g must be positive");
  if (!(temperature_K > 0.0)) throw DomainError("temperature must be positive");
}

namespace {
double zeeman_ratio(const SpinT1Params& p, double field_T) {
  return p.g * constants::mu_B * field_T / (2.0 * constants::k_B * p.temperature_K);
}
}  // namespace

double flipflop_term(const SpinT1Params& p, double field_T) {
  const double c = std::cosh(zeeman_ratio(p, field_T));
  const double g2 = p.g * p.g;
  return p.A_o * g2 * g2 / (c * c);
}

double direct_term(const SpinT1Params& p, double field_T) {
  if (field_T < 0.0) throw DomainError("field must be non-negative");
  const double x = zeeman_ratio(p, field_T);
  const double nu = p.g * constants::mu_B * field_T / constants::h;
  // nu * coth(x) -> 2 k_B T / h as B -> 0, so the term vanishes like B^4.
  const double nu_coth =
      x < 1e-4 ? 2.0 * constants::k_B * p.temperature_K / constants::h * (1.0 + x * x / 3.0)
               : nu / std::tanh(x);
  return p.A_d * nu * nu * nu * nu * nu_coth;
}

double spin_T1_inverse(const SpinT1Params& p, double field_T) {
  p.validate();
  if (field_T < 0.0) throw DomainError("field must be non-negative");
  return flipflop_term(p, field_T) + direct_term(p, field_T) + p.R_o;
}

}  // namespace kramers
