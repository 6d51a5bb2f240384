#include <Eigen/Eigenvalues>
#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "kramers/errors.hpp"
#include "kramers/linalg/jacobi.hpp"
#include "kramers/physics/units.hpp"
#include "kramers/spin_hamiltonian.hpp"
#include "support.hpp"

using namespace kramers;

namespace {
constexpr double kMuBOverH = 9.2740100783e-24 / 6.62607015e-34;  // Hz/T

// Breit-Rabi levels (Hz) for S = 1/2, isotropic A, no nuclear Zeeman term.
std::vector<double> breit_rabi(double a_Hz, double nuclear_spin, double g, double field_T) {
  const double dE = a_Hz * (nuclear_spin + 0.5);
  const double x = g * kMuBOverH * field_T / dE;
  const double n = 2 * nuclear_spin + 1;
  std::vector<double> e;
  for (double m = -nuclear_spin - 0.5; m <= nuclear_spin + 0.5 + 1e-9; m += 1.0) {
    if (std::abs(std::abs(m) - (nuclear_spin + 0.5)) < 1e-9) {
      // Stretched states are linear in the field.
      e.push_back(a_Hz * nuclear_spin / 2 + (m > 0 ? 1 : -1) * g * kMuBOverH * field_T / 2);
      continue;
    }
    const double root = std::sqrt(1 + 4 * m * x / n + x * x);
    e.push_back(-dE / (2 * n) + dE / 2 * root);
    e.push_back(-dE / (2 * n) - dE / 2 * root);
  }
  std::sort(e.begin(), e.end());
  return e;
}

Eigen::MatrixXcd random_hermitian(testing::Gen& gen, int n) {
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = gen.uniform(-1, 1);
    for (int j = i + 1; j < n; ++j) {
      m(i, j) = {gen.uniform(-1, 1), gen.uniform(-1, 1)};
      m(j, i) = std::conj(m(i, j));
    }
  }
  return m;
}
}  // namespace

TEST_CASE("Jacobi agrees with a reference eigen solver") {
  testing::Gen gen(31);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = gen.integer(1, 20);
    const Eigen::MatrixXcd m = random_hermitian(gen, n);
    const auto mine = linalg::jacobi_eigen(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ref(m);
    for (int k = 0; k < n; ++k) CHECK(mine.values[k] == doctest::Approx(ref.eigenvalues()(k)).epsilon(1e-10).scale(1.0));
    // Eigenpairs: || M v - lambda v || small.
    for (int k = 0; k < n; ++k) {
      const Eigen::VectorXcd v = mine.vectors.col(k);
      CHECK((m * v - mine.values[k] * v).norm() < 1e-9);
      CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
}

TEST_CASE("Hamiltonian is Hermitian and traceless") {
  testing::Gen gen(32);
  for (int trial = 0; trial < 30; ++trial) {
    SpinSystem sys;
    sys.g = gen.uniform(1.0, 10.0);
    sys.hyperfine_Hz = gen.uniform(-800e6, 800e6);
    const double b = gen.uniform(0.0, 0.5);
    const Eigen::MatrixXcd h = spin_hamiltonian_matrix(sys, b);
    CHECK(h.rows() == 16);
    CHECK((h - h.adjoint()).norm() < 1e-6);
    CHECK(std::abs(h.trace()) < 1e-6 * h.norm());
    const auto levels = linalg::jacobi_eigen(h);
    const double sum = std::accumulate(levels.values.begin(), levels.values.end(), 0.0);
    CHECK(std::abs(sum) < 1e-9 * h.norm());
  }
}

TEST_CASE("exact levels reproduce Breit-Rabi") {
  testing::Gen gen(33);
  for (int trial = 0; trial < 30; ++trial) {
    SpinSystem sys;
    sys.hyperfine_Hz = gen.uniform(10e6, 900e6);
    const double b = gen.uniform(0.0, 0.3);
    const auto exact = linalg::jacobi_eigen(spin_hamiltonian_matrix(sys, b)).values;
    const auto oracle = breit_rabi(sys.hyperfine_Hz, 3.5, sys.g, b);
    REQUIRE(exact.size() == oracle.size());
    for (std::size_t k = 0; k < exact.size(); ++k)
      CHECK(exact[k] == doctest::Approx(oracle[k]).epsilon(1e-9).scale(sys.hyperfine_Hz));
  }
}

TEST_CASE("zero-field hyperfine multiplets") {
  SpinSystem sys;
  sys.hyperfine_Hz = 75e6;
  const auto e = linalg::jacobi_eigen(spin_hamiltonian_matrix(sys, 0.0)).values;
  const double a = sys.hyperfine_Hz;
  // F = 3 (7 states) at -9A/4, F = 4 (9 states) at +7A/4.
  for (int k = 0; k < 7; ++k) CHECK(e[k] == doctest::Approx(-9 * a / 4).epsilon(1e-10));
  for (int k = 7; k < 16; ++k) CHECK(e[k] == doctest::Approx(7 * a / 4).epsilon(1e-10));
}

TEST_CASE("transitions are labelled near resonance") {
  SpinSystem sys;
  const double b0 = resonance_field_T(9.7e9, sys.g);
  const ExactLevels lv = exact_levels(sys, b0);
  REQUIRE(lv.transitions.size() == 8);
  for (std::size_t k = 0; k < lv.transitions.size(); ++k) {
    CHECK(lv.transitions[k].m_I == doctest::Approx(3.5 - static_cast<double>(k)));
    CHECK(lv.transitions[k].frequency_Hz == doctest::Approx(9.7e9).epsilon(0.05));
  }
  // Electron flips shift by roughly A per nuclear projection.
  CHECK(lv.transitions[0].frequency_Hz - lv.transitions[1].frequency_Hz ==
        doctest::Approx(sys.hyperfine_Hz).epsilon(0.05));
}

TEST_CASE("first-order lines are evenly spaced by A") {
  SpinSystem sys;
  sys.hyperfine_Hz = 75e6;
  const auto lines = resonance_fields_perturbative(sys, 9.7e9, 1);
  REQUIRE(lines.size() == 8);
  const double a_T = sys.hyperfine_Hz / (sys.g * kMuBOverH);
  for (std::size_t k = 1; k < lines.size(); ++k)
    CHECK(std::abs(lines[k].field_T - lines[k - 1].field_T) == doctest::Approx(a_T).epsilon(1e-12));
  SpinSystem even = sys;
  even.nuclear_spin = 0.0;
  const auto single = resonance_fields_perturbative(even, 9.7e9, 2);
  REQUIRE(single.size() == 1);
  CHECK(single[0].field_T == doctest::Approx(resonance_field_T(9.7e9, sys.g)).epsilon(1e-14));
}

TEST_CASE("second-order perturbation tracks exact diagonalisation") {
  auto max_dev = [](double a_Hz) {
    SpinSystem sys;
    sys.hyperfine_Hz = a_Hz;
    const auto pert = resonance_fields_perturbative(sys, 9.7e9, 2);
    const auto exact = resonance_fields_exact(sys, 9.7e9);
    REQUIRE(pert.size() == exact.size());
    double dev = 0.0;
    for (const auto& p : pert) {
      const auto it = std::find_if(exact.begin(), exact.end(), [&](const ResonanceLine& e) { return e.m_I == p.m_I; });
      REQUIRE(it != exact.end());
      dev = std::max(dev, std::abs(it->field_T - p.field_T));
    }
    return dev;
  };
  const double full = max_dev(75e6), half = max_dev(37.5e6);
  CHECK(full < 0.05e-3);
  CHECK(full == doctest::Approx(4.12e-8).epsilon(0.02));
  CHECK(full / half >= 8.0);
}

TEST_CASE("odd isotope echo share") {
  SpinSystem sys;
  const double oracle = 0.23 / 8 / (0.77 + 0.23 / 8);
  CHECK(odd_isotope_signal_share(sys) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(std::abs(odd_isotope_signal_share(sys) - 0.036) <= 0.005);
}

TEST_CASE("EPR spectrum weights and area") {
  SpinSystem sys;
  const double b0 = resonance_field_T(9.7e9, sys.g);
  const EprSpectrum s = synthesize_epr_spectrum(sys, 9.7e9, {0.6 * b0, 1.4 * b0, 8001});
  double weights = 0.0;
  for (const auto& l : s.registry) weights += l.weight;
  CHECK(weights == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.registry.size() == 9);
  const double step = s.field_mT[1] - s.field_mT[0];
  const double area = std::accumulate(s.intensity.begin(), s.intensity.end(), 0.0) * step;
  CHECK(area == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(count_local_maxima(s.intensity) >= 1);
  CHECK_THROWS_AS(synthesize_epr_spectrum(sys, 9.7e9, {0.2, 0.1, 100}), DomainError);
}

TEST_CASE("spin system validation") {
  SpinSystem sys;
  sys.g = -1;
  CHECK_THROWS_AS(sys.validate(), DomainError);
  sys = {};
  sys.odd_abundance = 1.5;
  CHECK_THROWS_AS(sys.validate(), DomainError);
  sys = {};
  sys.nuclear_spin = 1.25;
  CHECK_THROWS_AS(sys.validate(), DomainError);
}

TEST_CASE("count_local_maxima") {
  const std::vector<double> flat(10, 1.0), two{0, 1, 0, 0, 2, 0}, edge{3, 2, 1};
  CHECK(count_local_maxima(flat) == 0);
  CHECK(count_local_maxima(two) == 2);
  CHECK(count_local_maxima(edge) == 0);
}
