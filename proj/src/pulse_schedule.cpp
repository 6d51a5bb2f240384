#include <cmath>
#include <string>

#include "kramers/errors.hpp"
#include "kramers/pulse_sim.hpp"

namespace kramers {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_duration(double d, const char* what) {
  if (!std::isfinite(d) || d <= 0.0)
    throw DomainError(std::string(what) + " duration must be positive and finite");
}

}  // namespace

PulseSchedule::PulseSchedule(std::vector<ScheduleItem> items, int repetitions, std::uint64_t seed)
    : items_(std::move(items)), repetitions_(repetitions), seed_(seed) {
  validate();
}

void PulseSchedule::validate() const {
  if (repetitions_ < 1) throw DomainError("repetitions must be >= 1");
  int collects = 0;
  for (const auto& item : items_) {
    std::visit(Overloaded{
                   [](const Pulse& p) {
                     require_duration(p.duration_s, "pulse");
                     if (!std::isfinite(p.flip_angle)) throw DomainError("flip angle must be finite");
                   },
                   [](const Delay& d) {
                     if (!std::isfinite(d.duration_s) || d.duration_s < 0.0)
                       throw DomainError("delay must be non-negative and finite");
                   },
                   [&](const Collect& c) {
                     require_duration(c.window_s, "collect");
                     ++collects;
                   },
               },
               item);
  }
  if (collects > 1) throw DomainError("a schedule collects at most once per shot");
}

double PulseSchedule::total_duration() const {
  double t = 0.0;
  for (const auto& item : items_)
    t += std::visit(Overloaded{[](const Pulse& p) { return p.duration_s; },
                               [](const Delay& d) { return d.duration_s; },
                               [](const Collect& c) { return c.window_s; }},
                    item);
  return t * repetitions_;
}

int PulseSchedule::pulse_count() const {
  int n = 0;
  for (const auto& item : items_) n += std::holds_alternative<Pulse>(item) ? 1 : 0;
  return n;
}

std::optional<double> PulseSchedule::collect_window() const {
  for (const auto& item : items_)
    if (const auto* c = std::get_if<Collect>(&item)) return c->window_s;
  return std::nullopt;
}

PulseSchedule PulseSchedule::hahn_echo(double tau_s, double half_pi_s, double pi_s) {
  constexpr double pi = 3.141592653589793;
  return PulseSchedule({Pulse{pi / 2, half_pi_s}, Delay{tau_s}, Pulse{pi, pi_s}, Delay{tau_s},
                        Collect{pi_s}});
}

PulseSchedule PulseSchedule::generalized_hahn_echo(double tau_s, double theta, double half_pi_s,
                                                   double second_s) {
  constexpr double pi = 3.141592653589793;
  return PulseSchedule({Pulse{pi / 2, half_pi_s}, Delay{tau_s}, Pulse{theta, second_s},
                        Delay{tau_s}, Collect{second_s}});
}

PulseSchedule PulseSchedule::inversion_recovery(double tau_s, double echo_tau_s, double half_pi_s,
                                                double pi_s) {
  constexpr double pi = 3.141592653589793;
  return PulseSchedule({Pulse{pi, pi_s}, Delay{tau_s}, Pulse{pi / 2, half_pi_s}, Delay{echo_tau_s},
                        Pulse{pi, pi_s}, Delay{echo_tau_s}, Collect{pi_s}});
}

PulseSchedule PulseSchedule::pump_probe(double tau_s, bool with_probe, double pulse_s,
                                        double window_s) {
  std::vector<ScheduleItem> items{Pulse{0.0, pulse_s}, Delay{tau_s}};
  if (with_probe)
    items.emplace_back(Pulse{0.0, pulse_s});
  else
    items.emplace_back(Delay{pulse_s});
  items.emplace_back(Collect{window_s});
  return PulseSchedule(std::move(items));
}

}  // namespace kramers
