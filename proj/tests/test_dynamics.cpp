#include "doctest.h"
#include "kramers/dynamics.hpp"
#include "kramers/errors.hpp"
#include "kramers/physics/units.hpp"
#include "support.hpp"

using namespace kramers;

namespace {
constexpr double kPi = 3.141592653589793;
constexpr double kKB = 1.380649e-23;
constexpr double kMeV = 1.602176634e-22;
}  // namespace

TEST_CASE("linewidth and coherence time") {
  CHECK(linewidth_from_T2(720e-9) == doctest::Approx(1.0 / (kPi * 720e-9)).epsilon(1e-14));
  CHECK(linewidth_from_T2(720e-9) == doctest::Approx(442.1e3).epsilon(5e-4));
  CHECK(linewidth_from_T2(0.66e-6) == doctest::Approx(482.3e3).epsilon(5e-4));
  // radiative limit in the same convention, about 94 Hz
  CHECK(linewidth_from_T2(3.4e-3) == doctest::Approx(93.62).epsilon(1e-3));
  CHECK(std::abs(linewidth_from_T2(3.4e-3) - 94.0) < 0.5);
  CHECK_THROWS_AS(linewidth_from_T2(0.0), DomainError);
  CHECK_THROWS_AS(T2_from_linewidth(-1.0), DomainError);
}

TEST_CASE("property: linewidth and T2 are inverse maps") {
  testing::Gen gen(41);
  for (int trial = 0; trial < 300; ++trial) {
    const double t2 = gen.log_uniform(1e-9, 1e-1);
    CHECK(testing::rel_diff(T2_from_linewidth(linewidth_from_T2(t2)), t2) < 1e-14);
  }
}

TEST_CASE("homogeneous linewidth model") {
  HomLinewidthParams p{200e3, 25.5e3, 1.112e8, 2.05 * kMeV};
  const double t = 3.6;
  const double orbach = 1.112e8 * std::exp(-2.05 * kMeV / (kKB * t));
  CHECK(orbach_term(p, t) == doctest::Approx(orbach).epsilon(1e-12));
  CHECK(orbach_term(p, t) == doctest::Approx(150.1e3).epsilon(2e-3));
  CHECK(gamma_hom(p, t) == doctest::Approx(200e3 + 25.5e3 * t + orbach).epsilon(1e-12));
  CHECK_THROWS_AS(gamma_hom(p, 0.0), DomainError);
  p.alpha_orbach_Hz = -1;
  CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("property: linewidth grows with temperature for non-negative coefficients") {
  testing::Gen gen(42);
  for (int trial = 0; trial < 300; ++trial) {
    HomLinewidthParams p{gen.uniform(0, 1e6), gen.uniform(0, 1e5), gen.log_uniform(1e3, 1e10),
                         gen.uniform(0.1, 10) * kMeV};
    const double t1 = gen.uniform(0.5, 50), t2 = t1 + gen.uniform(0.01, 10);
    CHECK(gamma_hom(p, t2) >= gamma_hom(p, t1));
  }
}

TEST_CASE("instantaneous diffusion constant") {
  // Independent SI evaluation of (8 pi^2 / 9 sqrt 3) mu0/(4 pi) g^2 mu_B^2 / hbar.
  const double mu0 = 1.25663706212e-6, mub = 9.2740100783e-24, hbar = 6.62607015e-34 / (2 * kPi);
  const double g = 6.828;
  const double oracle = 8 * kPi * kPi / (9 * std::sqrt(3.0)) * mu0 / (4 * kPi) * g * g * mub * mub / hbar;
  CHECK(inst_diffusion_constant(g) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(inst_diffusion_constant(g) == doctest::Approx(1.9259e-17).epsilon(1e-4));
  CHECK_THROWS_AS(inst_diffusion_constant(0.0), DomainError);
}

TEST_CASE("instantaneous diffusion rate versus flip angle") {
  InstDiffusionParams p{6.828, 1.66e22, kPi, 0.66e-6};
  const double c = inst_diffusion_constant(6.828);
  CHECK(inst_diffusion_rate(p) == doctest::Approx(c * 1.66e22 + 1 / 0.66e-6).epsilon(1e-12));
  p.theta = kPi / 2;
  CHECK(inst_diffusion_term(p) == doctest::Approx(0.5 * c * 1.66e22).epsilon(1e-12));
  p.theta = 0.0;
  CHECK(inst_diffusion_rate(p) == doctest::Approx(1 / 0.66e-6).epsilon(1e-14));
  p.T2_bath_s = 0.0;
  CHECK(inst_diffusion_rate(p) == 0.0);
  p.density_m3 = -1;
  CHECK_THROWS_AS(inst_diffusion_rate(p), DomainError);
  p = {6.828, 1.0, 4.0, 0.0};
  CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("property: rate is affine in density and in sin^2(theta/2)") {
  testing::Gen gen(43);
  for (int trial = 0; trial < 200; ++trial) {
    InstDiffusionParams p{gen.uniform(1, 10), gen.log_uniform(1e19, 1e24), gen.uniform(0, kPi), gen.log_uniform(1e-7, 1e-3)};
    InstDiffusionParams q = p;
    q.density_m3 *= 2;
    CHECK(inst_diffusion_term(q) == doctest::Approx(2 * inst_diffusion_term(p)).epsilon(1e-12));
    const double s = std::sin(p.theta / 2);
    CHECK(inst_diffusion_term(p) == doctest::Approx(inst_diffusion_constant(p.g) * p.density_m3 * s * s).epsilon(1e-12));
  }
}

TEST_CASE("density to ppm with probed fraction") {
  CHECK(density_to_ppm(1.66e22, 2.524e28, 1.0) == doctest::Approx(0.6577).epsilon(1e-3));
  const double ppm = density_to_ppm(1.66e22, 2.524e28, 0.12);
  CHECK(ppm == doctest::Approx(1.66e22 / 0.12 / 2.524e28 * 1e6).epsilon(1e-12));
  CHECK(ppm >= 5.2);
  CHECK(ppm <= 6.0);
  CHECK_THROWS_AS(density_to_ppm(1e22, 2.5e28, 0.0), DomainError);
  CHECK_THROWS_AS(density_to_ppm(1e22, 2.5e28, 1.5), DomainError);
  CHECK_THROWS_AS(density_to_ppm(1e22, 0.0, 0.5), DomainError);
}

TEST_CASE("pulse bandwidth and probed fraction") {
  CHECK(rectangular_pulse_bandwidth(24e-9) == doctest::Approx(33.33e6).epsilon(1e-3));
  const double lw = convert({2.57, Unit::mT}, Unit::Hz, 6.828).value;
  CHECK(probed_fraction(lw, rectangular_pulse_bandwidth(24e-9)) == doctest::Approx(0.1357).epsilon(2e-3));
  CHECK(probed_fraction(1e6, 1e9) == 1.0);
  CHECK_THROWS_AS(rectangular_pulse_bandwidth(0.0), DomainError);
}

TEST_CASE("spin-lattice rate terms") {
  SpinT1Params p{1e-2, 1e-50, 5.0, 6.828, 3.6};
  const double b = 0.1;
  const double x = 6.828 * 9.2740100783e-24 * b / (2 * kKB * 3.6);
  const double nu = 6.828 * 9.2740100783e-24 * b / 6.62607015e-34;
  const double g4 = std::pow(6.828, 4);
  CHECK(flipflop_term(p, b) == doctest::Approx(1e-2 * g4 / std::pow(std::cosh(x), 2)).epsilon(1e-12));
  CHECK(direct_term(p, b) == doctest::Approx(1e-50 * std::pow(nu, 5) / std::tanh(x)).epsilon(1e-12));
  CHECK(spin_T1_inverse(p, b) == doctest::Approx(flipflop_term(p, b) + direct_term(p, b) + 5.0).epsilon(1e-14));
  CHECK(direct_term(p, 0.0) == 0.0);
  CHECK(spin_T1_inverse(p, 0.0) == doctest::Approx(1e-2 * g4 + 5.0).epsilon(1e-14));
  // Small-field branch joins the closed form smoothly.
  const double b_small = 1e-4 * 2 * kKB * 3.6 / (6.828 * 9.2740100783e-24);
  CHECK(direct_term(p, b_small * 0.999) == doctest::Approx(direct_term(p, b_small * 1.001)).epsilon(1e-2));
  CHECK_THROWS_AS(spin_T1_inverse(p, -0.1), DomainError);
}

TEST_CASE("property: flip-flop term falls and direct term rises with field") {
  testing::Gen gen(44);
  for (int trial = 0; trial < 200; ++trial) {
    SpinT1Params p{gen.log_uniform(1e-6, 1), gen.log_uniform(1e-60, 1e-45), 0.0, gen.uniform(1, 10), gen.uniform(1, 20)};
    const double b1 = gen.uniform(0.001, 0.5), b2 = b1 + gen.uniform(0.001, 0.5);
    CHECK(flipflop_term(p, b2) <= flipflop_term(p, b1));
    CHECK(direct_term(p, b2) >= direct_term(p, b1));
  }
}
