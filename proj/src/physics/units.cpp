#include "kramers/physics/units.hpp"

#include <array>
#include <cmath>
#include <utility>

#include "kramers/errors.hpp"
#include "kramers/physics/constants.hpp"

namespace kramers {
namespace {

struct UnitInfo {
  Unit unit;
  std::string_view symbol;
  Dimension dim;
  double scale;  // multiply by scale to reach the SI base of `dim`
};

constexpr std::array kUnits{
    UnitInfo{Unit::m, "m", Dimension::Length, 1.0},
    UnitInfo{Unit::nm, "nm", Dimension::Length, 1e-9},
    UnitInfo{Unit::Hz, "Hz", Dimension::Frequency, 1.0},
    UnitInfo{Unit::kHz, "kHz", Dimension::Frequency, 1e3},
    UnitInfo{Unit::MHz, "MHz", Dimension::Frequency, 1e6},
    UnitInfo{Unit::GHz, "GHz", Dimension::Frequency, 1e9},
    UnitInfo{Unit::THz, "THz", Dimension::Frequency, 1e12},
    UnitInfo{Unit::J, "J", Dimension::Energy, 1.0},
    UnitInfo{Unit::eV, "eV", Dimension::Energy, constants::e},
    UnitInfo{Unit::meV, "meV", Dimension::Energy, 1e-3 * constants::e},
    UnitInfo{Unit::ueV, "ueV", Dimension::Energy, 1e-6 * constants::e},
    UnitInfo{Unit::T, "T", Dimension::Field, 1.0},
    UnitInfo{Unit::mT, "mT", Dimension::Field, 1e-3},
    UnitInfo{Unit::G, "G", Dimension::Field, 1e-4},
    UnitInfo{Unit::K, "K", Dimension::Temperature, 1.0},
    UnitInfo{Unit::s, "s", Dimension::Time, 1.0},
    UnitInfo{Unit::ms, "ms", Dimension::Time, 1e-3},
    UnitInfo{Unit::us, "us", Dimension::Time, 1e-6},
    UnitInfo{Unit::ns, "ns", Dimension::Time, 1e-9},
    UnitInfo{Unit::one, "1", Dimension::Dimensionless, 1.0},
};

const UnitInfo& info(Unit u) {
  for (const auto& i : kUnits)
    if (i.unit == u) return i;
  throw DomainError("unit not in table");
}

// SI value of dimension `dim` -> energy in joules.
double to_energy(double si, Dimension dim, std::optional<double> g) {
  switch (dim) {
    case Dimension::Energy: return si;
    case Dimension::Frequency: return constants::h * si;
    case Dimension::Length:
      if (si <= 0.0) throw DomainError("wavelength must be positive");
      return constants::h * constants::c / si;
    case Dimension::Temperature: return constants::k_B * si;
    case Dimension::Field:
      if (!g) throw DomainError("field conversion needs a g value");
      return *g * constants::mu_B * si;
    default: throw DomainError("dimension has no energy equivalent");
  }
}

double from_energy(double joule, Dimension dim, std::optional<double> g) {
  switch (dim) {
    case Dimension::Energy: return joule;
    case Dimension::Frequency: return joule / constants::h;
    case Dimension::Length:
      if (joule <= 0.0) throw DomainError("wavelength of non-positive energy");
      return constants::h * constants::c / joule;
    case Dimension::Temperature: return joule / constants::k_B;
    case Dimension::Field:
      if (!g) throw DomainError("field conversion needs a g value");
      return joule / (*g * constants::mu_B);
    default: throw DomainError("dimension has no energy equivalent");
  }
}

}  // namespace

Quantity::Quantity(double v, Unit u) : value(v), unit(u) {
  if (!std::isfinite(v)) throw DomainError("quantity value must be finite");
}

Dimension dimension_of(Unit u) { return info(u).dim; }
std::string_view symbol(Unit u) { return info(u).symbol; }

std::optional<Unit> try_parse_unit(std::string_view text) {
  for (const auto& i : kUnits)
    if (i.symbol == text) return i.unit;
  if (text == "µs" || text == "μs") return Unit::us;
  if (text == "µeV" || text == "μeV") return Unit::ueV;
  if (text == "Gauss" || text == "gauss") return Unit::G;
  if (text == "") return Unit::one;
  return std::nullopt;
}

Unit parse_unit(std::string_view text) {
  if (auto u = try_parse_unit(text)) return *u;
  throw DomainError("unknown unit '" + std::string(text) + "'");
}

double to_si(const Quantity& q) { return q.value * info(q.unit).scale; }

Quantity from_si(double si_value, Unit u) { return {si_value / info(u).scale, u}; }

Quantity convert(const Quantity& q, Unit to, std::optional<double> g) {
  const Dimension from_dim = dimension_of(q.unit);
  const Dimension to_dim = dimension_of(to);
  if (g && *g <= 0.0) throw DomainError("g must be positive");
  if (from_dim == to_dim) {
    if (from_dim == Dimension::Length && q.value <= 0.0)
      throw DomainError("wavelength must be positive");
    return from_si(to_si(q), to);
  }
  if (from_dim == Dimension::Time || to_dim == Dimension::Time ||
      from_dim == Dimension::Dimensionless || to_dim == Dimension::Dimensionless)
    throw DomainError("no conversion between " + std::string(symbol(q.unit)) + " and " +
                      std::string(symbol(to)));
  const double joule = to_energy(to_si(q), from_dim, g);
  return from_si(from_energy(joule, to_dim, g), to);
}

Quantity wavelength_to_frequency(const Quantity& wavelength) {
  if (dimension_of(wavelength.unit) != Dimension::Length)
    throw DomainError("wavelength_to_frequency expects a length");
  if (wavelength.value <= 0.0) throw DomainError("wavelength must be positive");
  return from_si(constants::c / to_si(wavelength), Unit::THz);
}

Quantity energy_to_frequency(const Quantity& energy) {
  if (dimension_of(energy.unit) != Dimension::Energy)
    throw DomainError("energy_to_frequency expects an energy");
  return from_si(to_si(energy) / constants::h, Unit::GHz);
}

Quantity field_to_larmor(const Quantity& field, double g) {
  if (dimension_of(field.unit) != Dimension::Field)
    throw DomainError("field_to_larmor expects a magnetic field");
  if (g <= 0.0) throw DomainError("g must be positive");
  if (field.value < 0.0) throw DomainError("field must be non-negative");
  return from_si(larmor_hz(to_si(field), g), Unit::GHz);
}

double larmor_hz(double field_T, double g) { return g * constants::mu_B * field_T / constants::h; }

double resonance_field_T(double frequency_Hz, double g) {
  if (g <= 0.0) throw DomainError("g must be positive");
  return constants::h * frequency_Hz / (g * constants::mu_B);
}

double thermal_energy_J(double temperature_K) { return constants::k_B * temperature_K; }
double mev_to_joule(double mev) { return mev * 1e-3 * constants::e; }
double joule_to_mev(double joule) { return joule / (1e-3 * constants::e); }

}  // namespace kramers
