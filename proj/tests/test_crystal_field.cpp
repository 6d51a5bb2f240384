#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "kramers/crystal_field.hpp"
#include "kramers/errors.hpp"
#include "kramers/physics/constants.hpp"
#include "kramers/physics/units.hpp"
#include "support.hpp"

using namespace kramers;

namespace {
constexpr double kMeV = 1.602176634e-22;
constexpr double kKB = 1.380649e-23;

double p_of(const std::vector<Population>& pops, const std::string& label) {
  for (const auto& p : pops)
    if (p.label == label) return p.fraction;
  FAIL("no population for " << label);
  return 0.0;
}

LevelScheme random_scheme(testing::Gen& gen) {
  std::vector<Level> levels{{"Z1", Multiplet::Z, 0.0, 2}};
  double e = 0.0;
  const int nz = gen.integer(1, 5);
  for (int i = 2; i <= nz; ++i) {
    e += gen.uniform(0.1, 10.0) * kMeV;
    levels.push_back({"Z" + std::to_string(i), Multiplet::Z, e, gen.integer(0, 1) ? 4 : 2});
  }
  double y = 800.0 * kMeV;
  const int ny = gen.integer(1, 4);
  for (int i = 1; i <= ny; ++i) {
    levels.push_back({"Y" + std::to_string(i), Multiplet::Y, y, gen.integer(0, 1) ? 4 : 2});
    y += gen.uniform(0.1, 10.0) * kMeV;
  }
  return LevelScheme(levels);
}
}  // namespace

TEST_CASE("measured levels") {
  const LevelScheme s = LevelScheme::measured_levels();
  s.validate();
  CHECK(s.level("Z1").energy_J == 0.0);
  CHECK(s.level("Z2").energy_J == doctest::Approx(1.51 * kMeV).epsilon(1e-12));
  const double y1 = 6.62607015e-34 * 299792458.0 / 1530.74e-9;
  CHECK(s.level("Y1").energy_J == doctest::Approx(y1).epsilon(1e-12));
  CHECK(s.level("Y2").energy_J - s.level("Y1").energy_J == doctest::Approx(1.13 * kMeV).epsilon(1e-9));
  CHECK_THROWS_AS(s.level("Z9"), DomainError);
}

TEST_CASE("ground multiplet population at 3.6 K") {
  const auto pops = boltzmann_populations(LevelScheme::measured_levels(), Multiplet::Z, 3.6);
  const double oracle = 1.0 / (1.0 + std::exp(1.51 * kMeV / (kKB * 3.6)));
  CHECK(p_of(pops, "Z2") == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(p_of(pops, "Z2") == doctest::Approx(0.00764).epsilon(2e-3));
  // target: about 0.8 %
  CHECK(p_of(pops, "Z2") >= 0.007);
  CHECK(p_of(pops, "Z2") <= 0.010);
}

TEST_CASE("population ratios at 150 K") {
  const LevelScheme s = LevelScheme::measured_levels();
  const auto z = boltzmann_populations(s, Multiplet::Z, 150.0);
  const auto y = boltzmann_populations(s, Multiplet::Y, 150.0);
  CHECK(p_of(z, "Z2") / p_of(z, "Z1") == doctest::Approx(0.8897).epsilon(1e-4));
  CHECK(p_of(y, "Y2") / p_of(y, "Y1") == doctest::Approx(0.9163).epsilon(1e-4));
}

TEST_CASE("degeneracy weights populations") {
  LevelScheme s({{"Z1", Multiplet::Z, 0.0, 2}, {"Z2", Multiplet::Z, 1e-30, 4}, {"Y1", Multiplet::Y, 1e-19, 2}});
  const auto pops = boltzmann_populations(s, Multiplet::Z, 300.0);
  CHECK(p_of(pops, "Z2") / p_of(pops, "Z1") == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("level scheme validation") {
  CHECK_THROWS_AS(LevelScheme({{"Z1", Multiplet::Z, 0.0, 2}, {"Z2", Multiplet::Z, 0.0, 2}}).validate(), DomainError);
  CHECK_THROWS_AS(LevelScheme({{"Z1", Multiplet::Z, 1e-22, 2}}).validate(), DomainError);
  CHECK_THROWS_AS(LevelScheme({{"Z1", Multiplet::Z, 0.0, 3}}).validate(), DomainError);
  CHECK_THROWS_AS(boltzmann_populations(LevelScheme::measured_levels(), Multiplet::Z, 0.0), DomainError);
  CHECK_THROWS_AS(boltzmann_populations(LevelScheme::measured_levels(), Multiplet::Z, -1.0), DomainError);
}

TEST_CASE("mean ion separation") {
  MaterialSample s = MaterialSample::ceria_default();
  const double nc = 4.0 / std::pow(0.5411e-9, 3);
  CHECK(s.cation_density_m3 == doctest::Approx(nc).epsilon(1e-12));
  CHECK(nc == doctest::Approx(2.5248e28).epsilon(1e-4));
  const double oracle = std::cbrt(3.0 / (4.0 * 3.141592653589793 * 3e-6 * nc));
  CHECK(mean_ion_separation(s) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(mean_ion_separation(s) == doctest::Approx(14.67e-9).epsilon(1e-3));
  // target: about 14 nm
  CHECK(std::abs(mean_ion_separation(s) - 14.7e-9) / 14.7e-9 < 0.1);
  s.dopant_ppm = 5.66;
  CHECK(mean_ion_separation(s) == doctest::Approx(11.87e-9).epsilon(1e-3));
  s.dopant_ppm = 0.0;
  CHECK_THROWS_AS(mean_ion_separation(s), DomainError);
  s.dopant_ppm = 3.0;
  s.isotopes[0].abundance += 0.1;
  CHECK_THROWS_AS(s.validate(), DomainError);
}

TEST_CASE("PL spectrum at 3.6 K is dominated by Y1 lines") {
  const PlSpectrum pl = synthesize_pl_spectrum(LevelScheme::measured_levels(), 3.6, 9e9);
  REQUIRE(pl.lines.size() == 4);
  double y1 = 0.0, y2 = 0.0;
  for (const auto& l : pl.lines) {
    double& slot = l.upper == "Y1" ? y1 : y2;
    slot = std::max(slot, l.amplitude);
  }
  CHECK(y2 / y1 == doctest::Approx(std::exp(-1.13 * kMeV / (kKB * 3.6))).epsilon(1e-9));
  CHECK(y2 / y1 < 0.05);
  const auto peak = std::max_element(pl.intensity.begin(), pl.intensity.end()) - pl.intensity.begin();
  const double f_y1z1 = 299792458.0 / 1530.74e-9;
  const double step = pl.frequency_Hz[1] - pl.frequency_Hz[0];
  const double f_peak = pl.frequency_Hz[peak];
  // The strongest bin is one of the two Y1 lines.
  const double f_y1z2 = f_y1z1 - 1.51 * kMeV / 6.62607015e-34;
  CHECK(std::min(std::abs(f_peak - f_y1z1), std::abs(f_peak - f_y1z2)) <= step);
}

TEST_CASE("property: populations normalise and order by energy") {
  testing::Gen gen(21);
  for (int trial = 0; trial < 200; ++trial) {
    const LevelScheme s = random_scheme(gen);
    s.validate();
    const double t = gen.log_uniform(0.5, 500.0);
    for (Multiplet m : {Multiplet::Z, Multiplet::Y}) {
      const auto pops = boltzmann_populations(s, m, t);
      const auto levels = s.levels(m);
      double sum = 0.0;
      for (const auto& p : pops) {
        CHECK(p.fraction >= 0.0);
        sum += p.fraction;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      // Per-state occupation falls with energy.
      for (std::size_t i = 1; i < pops.size(); ++i)
        CHECK(pops[i].fraction / levels[i].degeneracy <= pops[i - 1].fraction / levels[i - 1].degeneracy * (1 + 1e-12));
    }
  }
}

TEST_CASE("property: PL intensity integrates to the summed line amplitudes") {
  testing::Gen gen(22);
  for (int trial = 0; trial < 25; ++trial) {
    const LevelScheme s = random_scheme(gen);
    const double t = gen.log_uniform(1.0, 300.0);
    const double res = gen.log_uniform(1e9, 100e9);
    const PlSpectrum pl = synthesize_pl_spectrum(s, t, res);
    const double step = pl.frequency_Hz[1] - pl.frequency_Hz[0];
    const double area = std::accumulate(pl.intensity.begin(), pl.intensity.end(), 0.0) * step;
    double total = 0.0;
    for (const auto& l : pl.lines) total += l.amplitude;
    CHECK(area == doctest::Approx(total).epsilon(1e-6));
    CHECK(pl.lines.size() == s.levels(Multiplet::Y).size() * s.levels(Multiplet::Z).size());
  }
}
