#include "doctest.h"
#include "kramers/errors.hpp"
#include "kramers/physics/constants.hpp"
#include "kramers/physics/units.hpp"
#include "support.hpp"

using namespace kramers;

namespace {
// Exact SI defining constants and CODATA 2018 mu_B, written out again so
// the library table is checked against an independent copy.
constexpr double kC = 299792458.0;
constexpr double kH = 6.62607015e-34;
constexpr double kE = 1.602176634e-19;
constexpr double kKB = 1.380649e-23;
constexpr double kMuB = 9.2740100783e-24;
}  // namespace

TEST_CASE("constants match the defining values") {
  CHECK(constants::c == kC);
  CHECK(constants::h == kH);
  CHECK(constants::e == kE);
  CHECK(constants::k_B == kKB);
  CHECK(constants::mu_B == kMuB);
  CHECK(constants::mu_B / constants::h == doctest::Approx(13.996245e9).epsilon(1e-7));
}

TEST_CASE("optical wavelengths convert to frequency") {
  const Quantity y1 = wavelength_to_frequency({1530.74, Unit::nm});
  CHECK(y1.unit == Unit::THz);
  CHECK(y1.value == doctest::Approx(kC / 1530.74e-9 / 1e12).epsilon(1e-12));
  CHECK(y1.value == doctest::Approx(195.848).epsilon(1e-5));
  // target: 195.84 THz
  CHECK(std::abs(y1.value - 195.84) / 195.84 < 5e-4);
  CHECK(wavelength_to_frequency({1473, Unit::nm}).value == doctest::Approx(203.525).epsilon(1e-5));
  CHECK_THROWS_AS(wavelength_to_frequency({0.0, Unit::nm}), DomainError);
  CHECK_THROWS_AS(wavelength_to_frequency({-3.0, Unit::nm}), DomainError);
}

TEST_CASE("energy to frequency is linear and sign preserving") {
  CHECK(energy_to_frequency({1.0, Unit::meV}).value == doctest::Approx(1e-3 * kE / kH / 1e9).epsilon(1e-12));
  CHECK(energy_to_frequency({1.0, Unit::meV}).value == doctest::Approx(241.799).epsilon(1e-5));
  CHECK(energy_to_frequency({1.51, Unit::meV}).value == doctest::Approx(365.1).epsilon(1e-3));
  CHECK(energy_to_frequency({-1.0, Unit::meV}).value == doctest::Approx(-241.799).epsilon(1e-5));
  CHECK(energy_to_frequency({0.0, Unit::meV}).value == 0.0);
}

TEST_CASE("field and Larmor frequency") {
  const double g = 6.828;
  const Quantity b = convert({9.7, Unit::GHz}, Unit::T, g);
  CHECK(b.value == doctest::Approx(kH * 9.7e9 / (g * kMuB)).epsilon(1e-12));
  CHECK(b.value == doctest::Approx(0.10150).epsilon(1e-4));
  // target: 0.102 T
  CHECK(std::abs(b.value - 0.102) / 0.102 < 5e-3);
  const Quantity lw = convert({2.57, Unit::mT}, Unit::MHz, g);
  CHECK(lw.value == doctest::Approx(245.6).epsilon(1e-3));
  CHECK(std::abs(lw.value - 244.9) / 244.9 < 1e-2);
  // Earth field near 0.35 G gives the observed beat of 3.33 +- 0.23 MHz.
  const Quantity beat = convert({0.35, Unit::G}, Unit::MHz, g);
  CHECK(beat.value == doctest::Approx(3.345).epsilon(1e-3));
  CHECK(std::abs(beat.value - 3.33) < 0.23);
  CHECK(field_to_larmor({1.0, Unit::T}, 2.0).value == doctest::Approx(2 * kMuB / kH / 1e9).epsilon(1e-12));
  CHECK_THROWS_AS(convert({1.0, Unit::T}, Unit::GHz), DomainError);
  CHECK_THROWS_AS(convert({1.0, Unit::T}, Unit::GHz, -1.0), DomainError);
}

TEST_CASE("unit parsing and dimension rules") {
  CHECK(parse_unit("us") == Unit::us);
  CHECK(parse_unit("µs") == Unit::us);
  CHECK(parse_unit("mT") == Unit::mT);
  CHECK_THROWS_AS(parse_unit("furlong"), DomainError);
  CHECK(!try_parse_unit("parsec").has_value());
  CHECK_THROWS_AS(convert({1.0, Unit::s}, Unit::Hz), DomainError);
  CHECK_THROWS_AS(Quantity(std::nan(""), Unit::K), DomainError);
  CHECK(convert({3.6, Unit::K}, Unit::meV).value == doctest::Approx(3.6 * kKB / kE * 1e3).epsilon(1e-12));
}

TEST_CASE("property: round trips through energy are identities") {
  testing::Gen gen(11);
  const Unit energy_like[] = {Unit::nm, Unit::THz, Unit::GHz, Unit::meV, Unit::eV, Unit::K, Unit::T, Unit::mT};
  for (int trial = 0; trial < 500; ++trial) {
    const Unit a = energy_like[gen.integer(0, 7)];
    const Unit b = energy_like[gen.integer(0, 7)];
    const double v = gen.log_uniform(1e-3, 1e4);
    const double g = gen.uniform(0.5, 10.0);
    const Quantity there = convert({v, a}, b, g);
    const Quantity back = convert(there, a, g);
    CHECK(testing::rel_diff(back.value, v) < 1e-12);
  }
}

TEST_CASE("property: frequency conversion is linear in energy") {
  testing::Gen gen(12);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = gen.uniform(-50, 50), b = gen.uniform(-50, 50);
    const double fa = energy_to_frequency({a, Unit::meV}).value;
    const double fb = energy_to_frequency({b, Unit::meV}).value;
    const double fab = energy_to_frequency({a + b, Unit::meV}).value;
    CHECK(std::abs(fab - fa - fb) <= 1e-12 * (std::abs(fa) + std::abs(fb)) + 1e-12);
  }
}
