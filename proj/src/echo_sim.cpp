#include <cmath>
#include <random>

#include "kramers/errors.hpp"
#include "kramers/pulse_sim.hpp"

namespace kramers {
namespace {

void check_tau(const std::vector<double>& tau) {
  if (tau.empty()) throw DomainError("delay grid is empty");
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!std::isfinite(tau[i]) || tau[i] < 0.0)
      throw DomainError("delays must be finite and non-negative");
    if (i > 0 && tau[i] <= tau[i - 1]) throw DomainError("delays must be strictly increasing");
  }
}

void add_noise(EchoTrace& trace, double sigma, std::uint64_t seed) {
  if (sigma < 0.0 || !std::isfinite(sigma)) throw DomainError("noise sigma must be >= 0");
  trace.sigma.assign(trace.size(), sigma);
  if (sigma == 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : trace.value) v += noise(rng);
}

}  // namespace

void EchoTrace::validate() const {
  if (value.size() != tau_s.size() || (!sigma.empty() && sigma.size() != tau_s.size()))
    throw DomainError("trace columns differ in length");
  check_tau(tau_s);
  for (double v : value)
    if (!std::isfinite(v)) throw DomainError("trace value is not finite");
  for (double s : sigma)
    if (!std::isfinite(s) || s < 0.0) throw DomainError("trace sigma must be finite and >= 0");
}

std::vector<double> uniform_grid(double first, double last, int count) {
  if (count < 1) throw DomainError("grid needs at least one point");
  if (!std::isfinite(first) || !std::isfinite(last)) throw DomainError("grid ends must be finite");
  if (count == 1) return {first};
  std::vector<double> g(static_cast<std::size_t>(count));
  const double step = (last - first) / (count - 1);
  for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = first + step * i;
  g.back() = last;
  return g;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

EchoTrace simulate_echo_decay(const EchoDecaySpec& spec) {
  if (!(spec.T2_s > 0.0) || !std::isfinite(spec.T2_s)) throw DomainError("T2 must be positive");
  if (spec.beat.depth < 0.0 || spec.beat.depth > 1.0) throw DomainError("beat depth must lie in [0, 1]");
  if (!std::isfinite(spec.amplitude)) throw DomainError("amplitude must be finite");
  check_tau(spec.tau_s);
  constexpr double pi = 3.141592653589793;
  EchoTrace t;
  t.tau_s = spec.tau_s;
  t.value.reserve(t.tau_s.size());
  for (double tau : t.tau_s) {
    const double beat = (1.0 + spec.beat.depth *
                                   std::cos(2 * pi * spec.beat.frequency_Hz * tau + spec.beat.phase)) /
                        (1.0 + spec.beat.depth);
    double e = spec.amplitude * std::exp(-2.0 * tau / spec.T2_s) * beat;
    if (spec.convention == EchoConvention::Intensity) e *= e;
    t.value.push_back(e);
  }
  add_noise(t, spec.noise_sigma, spec.seed);
  return t;
}

EchoTrace simulate_generalized_echo(const InstDiffusionParams& params, std::vector<double> tau_s,
                                    double amplitude, double noise_sigma, std::uint64_t seed) {
  const double rate = inst_diffusion_rate(params);
  if (!(rate > 0.0)) throw DomainError("echo decay rate is zero; give a bath T2 or a nonzero angle");
  EchoDecaySpec spec;
  spec.T2_s = 1.0 / rate;
  spec.tau_s = std::move(tau_s);
  spec.amplitude = amplitude;
  spec.noise_sigma = noise_sigma;
  spec.seed = seed;
  return simulate_echo_decay(spec);
}

EchoTrace simulate_inversion_recovery(const RecoverySpec& spec) {
  if (spec.components.empty()) throw DomainError("recovery needs at least one component");
  for (const auto& c : spec.components) {
    if (!(c.T1_s > 0.0) || !std::isfinite(c.T1_s)) throw DomainError("T1 must be positive");
    if (!std::isfinite(c.weight)) throw DomainError("recovery weight must be finite");
  }
  check_tau(spec.tau_s);
  EchoTrace t;
  t.tau_s = spec.tau_s;
  for (double tau : t.tau_s) {
    double s = 0.0;
    for (const auto& c : spec.components) s += c.weight * (1.0 - 2.0 * std::exp(-tau / c.T1_s));
    t.value.push_back(spec.sign * s + spec.offset);
  }
  add_noise(t, spec.noise_sigma, spec.seed);
  return t;
}

}  // namespace kramers
