#include <cmath>
#include <complex>
#include <random>

#include "kramers/errors.hpp"
#include "kramers/physics/constants.hpp"
#include "kramers/pulse_sim.hpp"

namespace kramers {
namespace {

using Cplx = std::complex<double>;

// (exp(l t) - 1) / l, continuous through l = 0.
Cplx phi1(Cplx l, double t) {
  const Cplx z = l * t;
  if (std::abs(z) < 1e-8) return t * (1.0 + z / 2.0);
  return (std::exp(z) - 1.0) / l;
}

struct Spectral {
  Eigen::Vector3cd values;
  Eigen::Matrix3cd vectors;
  Eigen::Matrix3cd inverse;
  bool ok = false;
};

Spectral decompose(const Eigen::Matrix3d& q) {
  Spectral s;
  Eigen::EigenSolver<Eigen::Matrix3d> es(q);
  if (es.info() != Eigen::Success) return s;
  s.values = es.eigenvalues();
  s.vectors = es.eigenvectors();
  Eigen::JacobiSVD<Eigen::Matrix3cd> svd(s.vectors);
  const auto sv = svd.singularValues();
  if (!(sv(2) > 0.0) || sv(0) / sv(2) > 1e8) return s;
  s.inverse = s.vectors.inverse();
  s.ok = true;
  return s;
}

int rk4_steps(const Eigen::Matrix3d& q, double t) {
  const double rate = q.cwiseAbs().maxCoeff();
  return std::max(200, static_cast<int>(std::ceil(rate * t / 0.02)));
}

}  // namespace

RateSystem RateSystem::thermal(double T1_eff_s, double field_T, double g, double temperature_K,
                               double pump_rate, double radiative_lifetime_s,
                               double branching_down) {
  if (!(T1_eff_s > 0.0)) throw DomainError("T1 must be positive");
  if (!(temperature_K > 0.0)) throw DomainError("temperature must be positive");
  if (field_T < 0.0 || !(g > 0.0)) throw DomainError("field must be >= 0 and g positive");
  const double ratio =
      std::exp(-g * constants::mu_B * field_T / (constants::k_B * temperature_K));
  RateSystem s;
  s.pump_rate = pump_rate;
  s.radiative_lifetime_s = radiative_lifetime_s;
  s.branching_down = branching_down;
  s.w_down = 1.0 / (T1_eff_s * (1.0 + ratio));
  s.w_up = s.w_down * ratio;
  s.validate();
  return s;
}

void RateSystem::validate() const {
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!finite_nonneg(pump_rate) || !finite_nonneg(w_up) || !finite_nonneg(w_down))
    throw DomainError("rates must be finite and non-negative");
  if (!(radiative_lifetime_s > 0.0) || !std::isfinite(radiative_lifetime_s))
    throw DomainError("radiative lifetime must be positive");
  if (branching_down < 0.0 || branching_down > 1.0)
    throw DomainError("branching ratio must lie in [0, 1]");
  if (w_up + w_down <= 0.0) throw DomainError("spin relaxation rates are both zero");
}

Eigen::Matrix3d RateSystem::generator(bool pump_on) const {
  validate();
  const double p = pump_on ? pump_rate : 0.0;
  const double gr = 1.0 / radiative_lifetime_s;
  Eigen::Matrix3d q = Eigen::Matrix3d::Zero();
  q(Up, Down) = w_up;
  q(Excited, Down) = p;
  q(Down, Up) = w_down;
  q(Down, Excited) = p + branching_down * gr;
  q(Up, Excited) = (1.0 - branching_down) * gr;
  for (int c = 0; c < 3; ++c) q(c, c) = -(q.col(c).sum() - q(c, c));
  return q;
}

Eigen::Vector3d RateSystem::thermal_state() const {
  validate();
  const double z = w_up + w_down;
  return {w_down / z, w_up / z, 0.0};
}

void check_generator(const Eigen::Matrix3d& q) {
  if (!q.allFinite()) throw DomainError("rate matrix has non-finite entries");
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < 3; ++r)
      if (r != c && q(r, c) < 0.0) throw DomainError("rate matrix has a negative transfer rate");
    if (std::abs(q.col(c).sum()) > 1e-12 * scale)
      throw DomainError("rate matrix does not conserve population");
  }
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> propagate_rk4(const Eigen::Matrix3d& q,
                                                          const Eigen::Vector3d& p, double t,
                                                          int steps) {
  if (steps < 1) throw DomainError("RK4 needs at least one step");
  const double h = t / steps;
  Eigen::Vector3d x = p;
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  for (int i = 0; i < steps; ++i) {
    const Eigen::Vector3d k1 = q * x;
    const Eigen::Vector3d x2 = x + 0.5 * h * k1;
    const Eigen::Vector3d k2 = q * x2;
    const Eigen::Vector3d x3 = x + 0.5 * h * k2;
    const Eigen::Vector3d k3 = q * x3;
    const Eigen::Vector3d x4 = x + h * k3;
    const Eigen::Vector3d k4 = q * x4;
    // Integral of the state over the step, Simpson-consistent with RK4.
    acc += h / 6.0 * (x + 2.0 * x2 + 2.0 * x3 + x4);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return {x, acc};
}

Eigen::Vector3d propagate(const Eigen::Matrix3d& q, const Eigen::Vector3d& p, double t) {
  check_generator(q);
  if (t < 0.0) throw DomainError("propagation time must be >= 0");
  if (t == 0.0) return p;
  const Spectral s = decompose(q);
  if (!s.ok) return propagate_rk4(q, p, t, rk4_steps(q, t)).first;
  const Eigen::Vector3cd c = s.inverse * p.cast<Cplx>();
  Eigen::Vector3cd out = Eigen::Vector3cd::Zero();
  for (int k = 0; k < 3; ++k) out += c(k) * std::exp(s.values(k) * t) * s.vectors.col(k);
  return out.real();
}

Eigen::Vector3d integrate(const Eigen::Matrix3d& q, const Eigen::Vector3d& p, double t) {
  check_generator(q);
  if (t < 0.0) throw DomainError("integration time must be >= 0");
  if (t == 0.0) return Eigen::Vector3d::Zero();
  const Spectral s = decompose(q);
  if (!s.ok) return propagate_rk4(q, p, t, rk4_steps(q, t)).second;
  const Eigen::Vector3cd c = s.inverse * p.cast<Cplx>();
  Eigen::Vector3cd out = Eigen::Vector3cd::Zero();
  for (int k = 0; k < 3; ++k) out += c(k) * phi1(s.values(k), t) * s.vectors.col(k);
  return out.real();
}

double collected_photons(const RateSystem& system, const PulseSchedule& schedule,
                         const Eigen::Vector3d& initial) {
  schedule.validate();
  const Eigen::Matrix3d q_on = system.generator(true);
  const Eigen::Matrix3d q_off = system.generator(false);
  Eigen::Vector3d p = initial;
  double photons = 0.0;
  for (int r = 0; r < schedule.repetitions(); ++r) {
    for (const auto& item : schedule.items()) {
      if (const auto* pulse = std::get_if<Pulse>(&item)) {
        p = propagate(q_on, p, pulse->duration_s);
      } else if (const auto* delay = std::get_if<Delay>(&item)) {
        p = propagate(q_off, p, delay->duration_s);
      } else {
        const double w = std::get<Collect>(item).window_s;
        photons += integrate(q_off, p, w)(RateSystem::Excited) / system.radiative_lifetime_s;
        p = propagate(q_off, p, w);
      }
    }
  }
  return photons;
}

double pump_probe_delta_pl(const PumpProbeSpec& spec, double tau_s) {
  const Eigen::Vector3d p0 = spec.system.thermal_state();
  const double with = collected_photons(
      spec.system, PulseSchedule::pump_probe(tau_s, true, spec.pulse_s, spec.window_s), p0);
  const double without = collected_photons(
      spec.system, PulseSchedule::pump_probe(tau_s, false, spec.pulse_s, spec.window_s), p0);
  return with - without;
}

EchoTrace simulate_pump_probe(const PumpProbeSpec& spec, const std::vector<double>& tau_s,
                              double noise_sigma, std::uint64_t seed) {
  if (noise_sigma < 0.0 || !std::isfinite(noise_sigma)) throw DomainError("noise sigma must be >= 0");
  EchoTrace t;
  t.tau_s = tau_s;
  for (double tau : tau_s) t.value.push_back(pump_probe_delta_pl(spec, tau));
  t.sigma.assign(t.size(), noise_sigma);
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (double& v : t.value) v += noise(rng);
  }
  t.validate();
  return t;
}

}  // namespace kramers
