#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace kramers {

enum class Dimension { Length, Frequency, Energy, Field, Temperature, Time, Dimensionless };

enum class Unit {
  m, nm,
  Hz, kHz, MHz, GHz, THz,
  J, eV, meV, ueV,
  T, mT, G,
  K,
  s, ms, us, ns,
  one,
};

/// A finite value tagged with the unit it is expressed in.
struct Quantity {
  double value;
  Unit unit;

  Quantity(double v, Unit u);
};

Dimension dimension_of(Unit u);
std::string_view symbol(Unit u);

/// Accepts the symbols returned by symbol() plus "um", "µs", "ueV" style
/// spellings. Throws DomainError on unknown text.
Unit parse_unit(std::string_view text);
std::optional<Unit> try_parse_unit(std::string_view text);

double to_si(const Quantity& q);
Quantity from_si(double value_si, Unit u);

/// Converts between any two units. Cross-dimension conversions go through
/// energy: length via hc/lambda, frequency via h*f, temperature via k_B*T,
/// magnetic field via g*mu_B*B (requires `g`). Time converts only to time.
Quantity convert(const Quantity& q, Unit to, std::optional<double> g = std::nullopt);

/// c / lambda, returned in THz. Throws DomainError for lambda <= 0.
Quantity wavelength_to_frequency(const Quantity& wavelength);

/// E / h, returned in GHz. Linear and sign preserving.
Quantity energy_to_frequency(const Quantity& energy);

/// g mu_B B / h, returned in GHz.
Quantity field_to_larmor(const Quantity& field, double g);

// SI helpers used throughout the library.
double larmor_hz(double field_T, double g);
double resonance_field_T(double frequency_Hz, double g);
double thermal_energy_J(double temperature_K);
double mev_to_joule(double mev);
double joule_to_mev(double joule);

}  // namespace kramers
