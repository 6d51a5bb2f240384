#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <cmath>
#include <random>
#include <thread>

#include "kramers/errors.hpp"
#include "kramers/fit/linear.hpp"
#include "kramers/physics/constants.hpp"
#include "kramers/pulse_sim.hpp"
#include "kramers/simd/kernels.hpp"

namespace kramers {
namespace {

// Compensated (Neumaier) sum, always taken in index order so results do
// not depend on the thread count.
struct Neumaier {
  double sum = 0.0, c = 0.0;
  void add(double v) {
    const double t = sum + v;
    c += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

double min_image(double d, double box) { return d - box * std::nearbyint(d / box); }

// Mean over central spins of cos(2 tau S_i) for one random configuration.
std::vector<double> one_realization(const McDiffusionSpec& spec, double box, double coupling,
                                    std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(spec.n_spins);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> x(n), y(n), z(n), flipped(n);
  const double cut2 = spec.cutoff_m * spec.cutoff_m;
  for (std::size_t i = 0; i < n; ++i) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) throw NumericalError("could not place spins outside the cutoff radius");
      x[i] = uni(rng) * box;
      y[i] = uni(rng) * box;
      z[i] = uni(rng) * box;
      bool ok = true;
      for (std::size_t j = 0; j < i && ok; ++j) {
        const double dx = min_image(x[i] - x[j], box), dy = min_image(y[i] - y[j], box),
                     dz = min_image(z[i] - z[j], box);
        ok = dx * dx + dy * dy + dz * dz >= cut2;
      }
      if (ok) break;
    }
  }
  const double s = std::sin(spec.theta / 2);
  const double p_flip = s * s;
  for (auto& f : flipped) f = uni(rng) < p_flip ? 1.0 : 0.0;

  std::vector<double> shift(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double origin[3] = {x[i], y[i], z[i]};
    auto part = [&](std::size_t b, std::size_t e) {
      if (b >= e) return 0.0;
      simd::PointSet ps{std::span(x).subspan(b, e - b), std::span(y).subspan(b, e - b),
                        std::span(z).subspan(b, e - b)};
      return simd::dipolar_sum(origin, ps, std::span<const double>(flipped).subspan(b, e - b), box);
    };
    shift[i] = coupling * (part(0, i) + part(i + 1, n));
  }

  std::vector<double> mean(spec.tau_s.size());
  for (std::size_t k = 0; k < spec.tau_s.size(); ++k) {
    Neumaier acc;
    for (std::size_t i = 0; i < n; ++i) acc.add(std::cos(2.0 * spec.tau_s[k] * shift[i]));
    mean[k] = acc.value() / static_cast<double>(n);
  }
  return mean;
}

}  // namespace

McDiffusionResult monte_carlo_instantaneous_diffusion(const McDiffusionSpec& spec) {
  if (!(spec.density_m3 > 0.0) || !std::isfinite(spec.density_m3))
    throw DomainError("spin density must be positive");
  if (spec.n_spins < 2) throw DomainError("need at least two spins");
  if (spec.n_realizations < 1) throw DomainError("need at least one realization");
  if (!(spec.g > 0.0)) throw DomainError("g must be positive");
  if (spec.cutoff_m < 0.0) throw DomainError("cutoff must be >= 0");
  if (!std::isfinite(spec.theta)) throw DomainError("flip angle must be finite");
  EchoTrace probe{spec.tau_s, std::vector<double>(spec.tau_s.size(), 0.0), {}};
  probe.validate();

  const double box = std::cbrt(spec.n_spins / spec.density_m3);
  if (4.0 / 3.0 * constants::pi * std::pow(spec.cutoff_m, 3) * spec.n_spins > 0.3 * box * box * box)
    throw DomainError("cutoff radius too large for the requested density");
  const double coupling = constants::mu_0 / (4 * constants::pi) * spec.g * spec.g * constants::mu_B *
                          constants::mu_B / constants::hbar;

  const auto r_count = static_cast<std::size_t>(spec.n_realizations);
  std::vector<std::vector<double>> per(r_count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto worker = [&] {
    for (std::size_t r; (r = next.fetch_add(1)) < r_count;) {
      try {
        per[r] = one_realization(spec, box, coupling, derive_seed(spec.seed, r));
      } catch (...) {
        std::lock_guard lock(failure_lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(r_count));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  McDiffusionResult res;
  res.trace.tau_s = spec.tau_s;
  const std::size_t m = spec.tau_s.size();
  res.trace.value.resize(m);
  res.trace.sigma.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    Neumaier sum;
    for (std::size_t r = 0; r < r_count; ++r) sum.add(per[r][k]);
    const double mean = sum.value() / static_cast<double>(r_count);
    Neumaier var;
    for (std::size_t r = 0; r < r_count; ++r) var.add((per[r][k] - mean) * (per[r][k] - mean));
    res.trace.value[k] = mean;
    res.trace.sigma[k] =
        r_count > 1 ? std::sqrt(var.value() / static_cast<double>(r_count - 1) / r_count) : 0.0;
  }

  std::vector<double> fx, fy;
  for (std::size_t k = 0; k < m; ++k) {
    if (res.trace.value[k] > spec.fit_floor) {
      fx.push_back(spec.tau_s[k]);
      fy.push_back(std::log(res.trace.value[k]));
    }
  }
  res.fitted_points = static_cast<int>(fx.size());
  if (fx.size() >= 2) {
    const auto lf = fit::fit_linear_weighted(fx, fy);
    res.rate_per_s = -lf.slope / 2.0;
    res.rate_stderr = std::sqrt(std::max(0.0, lf.var_slope)) / 2.0;
  }
  return res;
}

}  // namespace kramers
