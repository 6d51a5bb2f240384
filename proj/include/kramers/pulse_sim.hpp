#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "kramers/dynamics.hpp"

namespace kramers {

// ---------------------------------------------------------------------------
// Pulse schedules

struct Pulse {
  double flip_angle;  // rad; 0 for incoherent optical pumping
  double duration_s;
};
struct Delay {
  double duration_s;
};
struct Collect {
  double window_s;
};
using ScheduleItem = std::variant<Pulse, Delay, Collect>;

class PulseSchedule {
 public:
  PulseSchedule() = default;
  explicit PulseSchedule(std::vector<ScheduleItem> items, int repetitions = 1, std::uint64_t seed = 0);

  /// Positive durations, at most one Collect per shot, repetitions >= 1.
  void validate() const;

  const std::vector<ScheduleItem>& items() const { return items_; }
  int repetitions() const { return repetitions_; }
  std::uint64_t seed() const { return seed_; }
  double total_duration() const;
  int pulse_count() const;
  std::optional<double> collect_window() const;

  /// pi/2 - tau - pi (EPR defaults 12 ns / 24 ns).
  static PulseSchedule hahn_echo(double tau_s, double half_pi_s = 12e-9, double pi_s = 24e-9);
  /// pi/2 - tau - theta with the refocusing length held fixed.
  static PulseSchedule generalized_hahn_echo(double tau_s, double theta, double half_pi_s = 12e-9,
                                             double second_s = 24e-9);
  /// pi - tau - (pi/2 - tau_echo - pi).
  static PulseSchedule inversion_recovery(double tau_s, double echo_tau_s = 100e-9,
                                          double half_pi_s = 12e-9, double pi_s = 24e-9);
  /// Optical pump - tau - probe - collect. Without the probe the second
  /// pulse is replaced by an equally long delay so both shots share timing.
  static PulseSchedule pump_probe(double tau_s, bool with_probe, double pulse_s = 100e-6,
                                  double window_s = 4e-3);

 private:
  std::vector<ScheduleItem> items_;
  int repetitions_ = 1;
  std::uint64_t seed_ = 0;
};

// ---------------------------------------------------------------------------
// Traces

struct EchoTrace {
  std::vector<double> tau_s;
  std::vector<double> value;
  std::vector<double> sigma;

  /// tau strictly increasing, all values finite, equal lengths.
  void validate() const;
  std::size_t size() const { return tau_s.size(); }
};

std::vector<double> uniform_grid(double first, double last, int count);

/// Deterministic per-stream seed derived from a base seed (SplitMix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

enum class EchoConvention { Amplitude, Intensity };

struct BeatModulation {
  double frequency_Hz = 0.0;
  double depth = 0.0;  // 0..1
  double phase = 0.0;
};

struct EchoDecaySpec {
  double T2_s = 0.0;
  BeatModulation beat;
  std::vector<double> tau_s;
  EchoConvention convention = EchoConvention::Amplitude;
  double amplitude = 1.0;
  double noise_sigma = 0.0;  // absolute, per point
  std::uint64_t seed = 0;
};

/// E(tau) = A exp(-2 tau / T2) (1 + m cos(2 pi f tau + phi)) / (1 + m),
/// squared for the intensity convention, plus seeded Gaussian noise.
EchoTrace simulate_echo_decay(const EchoDecaySpec& spec);

/// Hahn echo with a refocusing pulse of angle theta: a single exponential
/// whose rate is the instantaneous-diffusion 1/T2.
EchoTrace simulate_generalized_echo(const InstDiffusionParams& params, std::vector<double> tau_s,
                                    double amplitude = 1.0, double noise_sigma = 0.0,
                                    std::uint64_t seed = 0);

struct RecoveryComponent {
  double weight;
  double T1_s;
};

struct RecoverySpec {
  std::vector<RecoveryComponent> components;
  std::vector<double> tau_s;
  double sign = 1.0;
  double offset = 0.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// S(tau) = sign * sum_i w_i (1 - 2 exp(-tau / T1_i)) + offset + noise.
EchoTrace simulate_inversion_recovery(const RecoverySpec& spec);

// ---------------------------------------------------------------------------
// Optical pump-probe rate equations

/// Three states: ground spin-down, ground spin-up, optically excited.
/// The pump couples spin-down and excited symmetrically while on; the
/// excited state decays radiatively with branching to spin-down and
/// spin-up; spin flips obey detailed balance.
struct RateSystem {
  enum State { Down = 0, Up = 1, Excited = 2 };

  double pump_rate = 1e4;            // 1/s while a pulse is on
  double radiative_lifetime_s = 3.4e-3;
  double branching_down = 0.5;
  double w_up = 0.0;                 // down -> up, 1/s
  double w_down = 0.0;               // up -> down, 1/s

  /// Spin rates from T1_eff = 1/(w_up + w_down) and the ratio
  /// w_up / w_down = exp(-g mu_B B / k_B T).
  static RateSystem thermal(double T1_eff_s, double field_T, double g, double temperature_K,
                            double pump_rate = 1e4, double radiative_lifetime_s = 3.4e-3,
                            double branching_down = 0.5);

  void validate() const;
  double T1_eff() const { return 1.0 / (w_up + w_down); }
  Eigen::Matrix3d generator(bool pump_on) const;
  Eigen::Vector3d thermal_state() const;
};

/// Column-conservative generator check; throws DomainError otherwise.
void check_generator(const Eigen::Matrix3d& q);

/// exp(Q t) p via eigendecomposition; falls back to RK4 when the
/// eigenvector basis is ill-conditioned.
Eigen::Vector3d propagate(const Eigen::Matrix3d& q, const Eigen::Vector3d& p, double t);
/// Integral of exp(Q s) p over [0, t].
Eigen::Vector3d integrate(const Eigen::Matrix3d& q, const Eigen::Vector3d& p, double t);
/// Classical RK4 with `steps` equal steps; returns {state, integral}.
std::pair<Eigen::Vector3d, Eigen::Vector3d> propagate_rk4(const Eigen::Matrix3d& q,
                                                          const Eigen::Vector3d& p, double t,
                                                          int steps);

/// Photons emitted inside the Collect window when `schedule` is applied to
/// the system starting from `initial`. Pulses switch the pump on.
double collected_photons(const RateSystem& system, const PulseSchedule& schedule,
                         const Eigen::Vector3d& initial);

struct PumpProbeSpec {
  RateSystem system;
  double pulse_s = 100e-6;
  double window_s = 4e-3;
};

/// Photons with the probe pulse minus photons of the reference shot.
double pump_probe_delta_pl(const PumpProbeSpec& spec, double tau_s);
EchoTrace simulate_pump_probe(const PumpProbeSpec& spec, const std::vector<double>& tau_s,
                              double noise_sigma = 0.0, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Monte-Carlo instantaneous diffusion

struct McDiffusionSpec {
  double density_m3 = 1.66e22;
  double theta = 3.141592653589793;
  double g = 6.828;
  std::vector<double> tau_s;
  int n_spins = 1000;
  int n_realizations = 200;
  std::uint64_t seed = 1;
  double cutoff_m = 0.5e-9;
  unsigned threads = 0;  // 0: hardware concurrency
  double fit_floor = 0.05;  // echo values below this are left out of the rate fit
};

struct McDiffusionResult {
  EchoTrace trace;           // mean echo and standard error over realizations
  double rate_per_s = 0.0;   // 1/T2 under the exp(-2 tau / T2) convention
  double rate_stderr = 0.0;
  int fitted_points = 0;
};

/// Random spins in a periodic cube at the requested density; each
/// partner is flipped with probability sin^2(theta/2) and shifts every
/// other spin by its dipolar coupling. Every spin serves as a central
/// spin; the echo is the mean of cos(2 tau * shift).
McDiffusionResult monte_carlo_instantaneous_diffusion(const McDiffusionSpec& spec);

}  // namespace kramers
