#pragma once

// Closed-form decoherence and relaxation models, SI units throughout
// (rates in 1/s, linewidths in Hz, energies in J, fields in T).
namespace kramers {

/// Temperature-dependent homogeneous linewidth
///   Gamma(T) = gamma0 + alpha_linear * T + alpha_orbach * exp(-delta_E / k_B T).
/// The linear coefficient covers both the two-level-system and the
/// direct-phonon names used for it.
struct HomLinewidthParams {
  double gamma0_Hz = 0.0;
  double alpha_linear_Hz_per_K = 0.0;
  double alpha_orbach_Hz = 0.0;
  double delta_E_J = 0.0;

  void validate() const;
};

double gamma_hom(const HomLinewidthParams& p, double temperature_K);
double orbach_term(const HomLinewidthParams& p, double temperature_K);

/// Gamma = 1 / (pi T2). A radiative lifetime passed here gives the
/// lifetime limit in the same 1/(pi T) convention; the textbook
/// 1/(2 pi T1) limit is half of it.
double linewidth_from_T2(double T2_s);
double T2_from_linewidth(double linewidth_Hz);

struct InstDiffusionParams {
  double g = 6.828;
  double density_m3 = 0.0;
  double theta = 3.141592653589793;  // flip angle of the refocusing pulse
  double T2_bath_s = 0.0;  // 0: no bath dephasing

  void validate() const;
};

/// (8 pi^2 / 9 sqrt 3) (mu0 / 4 pi) g^2 mu_B^2 / hbar, m^3/s. The Gaussian-unit
/// form g^2 beta^2 / hbar becomes SI through the mu0/4pi factor.
double inst_diffusion_constant(double g);

/// Instantaneous-diffusion part C N sin^2(theta/2), 1/s.
double inst_diffusion_term(const InstDiffusionParams& p);

/// 1/T2 = C N sin^2(theta/2) + 1/T2_bath, 1/s.
double inst_diffusion_rate(const InstDiffusionParams& p);

/// Dopant concentration in ppm of cation sites for a probed spin density,
/// corrected for the fraction of the inhomogeneous line the pulses excite.
double density_to_ppm(double density_m3, double cation_density_m3, double probed_fraction);

/// min(1, pulse_bandwidth / line_fwhm).
double probed_fraction(double line_fwhm_Hz, double pulse_bandwidth_Hz);

/// Excitation bandwidth of a rectangular pulse, `factor` / duration. The
/// default 0.8 is the convention used for the probed-fraction estimate;
/// 0.886 is the FWHM of the sinc^2 power spectrum.
double rectangular_pulse_bandwidth(double duration_s, double factor = 0.8);

/// Spin-lattice relaxation rate versus field,
///   1/T1 = Ao g^4 sech^2(x) + Ad (g mu_B B / h)^5 coth(x) + Ro,
///   x = g mu_B B / (2 k_B T).
struct SpinT1Params {
  double A_o = 0.0;  // 1/s per g^4
  double A_d = 0.0;  // 1/s per Hz^5
  double R_o = 0.0;  // 1/s
  double g = 6.828;
  double temperature_K = 3.6;

  void validate() const;
};

double spin_T1_inverse(const SpinT1Params& p, double field_T);
double flipflop_term(const SpinT1Params& p, double field_T);  // Ao g^4 sech^2(x)
double direct_term(const SpinT1Params& p, double field_T);    // Ad nu^5 coth(x), 0 at B = 0

}  // namespace kramers
