#include "kramers/fit/models.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include "kramers/dynamics.hpp"
#include "kramers/errors.hpp"
#include "kramers/fit/linear.hpp"
#include "kramers/physics/constants.hpp"

namespace kramers::fit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.6931471805599453;
const Bound kFree{};
const Bound kPositive{0.0, kInf};

// --- initial-guess helpers --------------------------------------------------

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

double span_of(std::span<const double> x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return *hi - *lo;
}

// Width of the region where y - base exceeds half the peak height.
double half_width(std::span<const double> x, std::span<const double> y, double base) {
  const std::size_t k = argmax(y);
  const double half = base + 0.5 * (y[k] - base);
  double lo = x[k], hi = x[k];
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] >= half) {
      lo = std::min(lo, x[i]);
      hi = std::max(hi, x[i]);
    }
  }
  const double w = hi - lo;
  return w > 0.0 ? w : span_of(x) / 10.0;
}

std::vector<double> peak_init(std::span<const double> x, std::span<const double> y) {
  const double base = *std::min_element(y.begin(), y.end());
  const std::size_t k = argmax(y);
  return {y[k] - base, x[k], half_width(x, y, base), base};
}

// Straight line through log(y) for positive y: {slope, intercept}.
std::pair<double, double> log_line(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  const double ymax = *std::max_element(y.begin(), y.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] > 0.05 * ymax) {
      lx.push_back(x[i]);
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2 || span_of(lx) <= 0.0) return {-1.0 / std::max(span_of(x), 1e-300), std::log(std::max(ymax, 1e-300))};
  const LinearFit lf = fit_linear_weighted(lx, ly);
  return {lf.slope, lf.intercept};
}

double mean_of_last(std::span<const double> y, std::size_t count) {
  count = std::clamp<std::size_t>(count, 1, y.size());
  double s = 0.0;
  for (std::size_t i = y.size() - count; i < y.size(); ++i) s += y[i];
  return s / static_cast<double>(count);
}

// a - b exp(-x / T): plateau from the tail, T from the 1/e crossing.
std::vector<double> recovery_init(std::span<const double> x, std::span<const double> y) {
  const double a = mean_of_last(y, std::max<std::size_t>(1, y.size() / 10));
  const double b = a - y.front();
  double t = span_of(x) / 3.0;
  if (b != 0.0) {
    for (std::size_t i = 1; i < x.size(); ++i) {
      if ((a - y[i]) / b < std::exp(-1.0)) {
        t = std::max(x[i] - x.front(), 1e-300);
        break;
      }
    }
  }
  return {a, b * std::exp(x.front() / t), t};
}

// --- model definitions ---------------------------------------------------------

Model lorentzian() {
  Model m;
  m.name = "lorentzian";
  m.formula = "amplitude * (fwhm/2)^2 / ((x - center)^2 + (fwhm/2)^2) + offset";
  m.x_quantity = "frequency or detuning";
  m.params = {"amplitude", "center", "fwhm", "offset"};
  m.bounds = {kFree, kFree, kPositive, kFree};
  m.f = [](double x, std::span<const double> p) {
    const double h = p[2] / 2, d = x - p[1];
    return p[0] * h * h / (d * d + h * h) + p[3];
  };
  m.grad = [](double x, std::span<const double> p, std::span<double> g) {
    const double h = p[2] / 2, d = x - p[1], den = d * d + h * h;
    g[0] = h * h / den;
    g[1] = p[0] * h * h * 2 * d / (den * den);
    g[2] = p[0] * h * d * d / (den * den);
    g[3] = 1.0;
  };
  m.init = [](auto x, auto y, auto) { return peak_init(x, y); };
  return m;
}

Model gaussian() {
  Model m;
  m.name = "gaussian";
  m.formula = "amplitude * exp(-4 ln2 (x - center)^2 / fwhm^2) + offset";
  m.x_quantity = "frequency, field or detuning";
  m.params = {"amplitude", "center", "fwhm", "offset"};
  m.bounds = {kFree, kFree, kPositive, kFree};
  m.f = [](double x, std::span<const double> p) {
    const double d = x - p[1];
    return p[0] * std::exp(-4 * kLn2 * d * d / (p[2] * p[2])) + p[3];
  };
  m.grad = [](double x, std::span<const double> p, std::span<double> g) {
    const double d = x - p[1], w2 = p[2] * p[2];
    const double e = std::exp(-4 * kLn2 * d * d / w2);
    g[0] = e;
    g[1] = p[0] * e * 8 * kLn2 * d / w2;
    g[2] = p[0] * e * 8 * kLn2 * d * d / (w2 * p[2]);
    g[3] = 1.0;
  };
  m.init = [](auto x, auto y, auto) { return peak_init(x, y); };
  return m;
}

Model exp_decay() {
  Model m;
  m.name = "exp_decay";
  m.formula = "amplitude * exp(-2 x / T2)";
  m.x_quantity = "delay (s)";
  m.params = {"amplitude", "T2"};
  m.bounds = {kFree, kPositive};
  m.f = [](double x, std::span<const double> p) { return p[0] * std::exp(-2 * x / p[1]); };
  m.grad = [](double x, std::span<const double> p, std::span<double> g) {
    const double e = std::exp(-2 * x / p[1]);
    g[0] = e;
    g[1] = p[0] * e * 2 * x / (p[1] * p[1]);
  };
  m.init = [](auto x, auto y, auto) {
    const auto [slope, icpt] = log_line(x, y);
    const double t2 = slope < 0.0 ? -2.0 / slope : span_of(x);
    return std::vector<double>{std::exp(icpt), t2};
  };
  return m;
}

Model exp_decay_beat() {
  Model m;
  m.name = "exp_decay_beat";
  m.formula = "amplitude * exp(-2 x / T2) * (1 + depth cos(2 pi f_osc x + phase)) / (1 + depth)";
  m.x_quantity = "delay (s)";
  m.params = {"amplitude", "T2", "f_osc", "depth", "phase"};
  m.bounds = {kFree, kPositive, kPositive, Bound{0.0, 1.0}, kFree};
  m.f = [](double x, std::span<const double> p) {
    const double ph = 2 * constants::pi * p[2] * x + p[4];
    return p[0] * std::exp(-2 * x / p[1]) * (1 + p[3] * std::cos(ph)) / (1 + p[3]);
  };
  m.grad = [](double x, std::span<const double> p, std::span<double> g) {
    const double ph = 2 * constants::pi * p[2] * x + p[4];
    const double e = std::exp(-2 * x / p[1]), c = std::cos(ph), s = std::sin(ph);
    const double mod = (1 + p[3] * c) / (1 + p[3]);
    g[0] = e * mod;
    g[1] = p[0] * e * mod * 2 * x / (p[1] * p[1]);
    g[2] = -p[0] * e * p[3] * s * 2 * constants::pi * x / (1 + p[3]);
    g[3] = p[0] * e * (c - 1) / ((1 + p[3]) * (1 + p[3]));
    g[4] = -p[0] * e * p[3] * s / (1 + p[3]);
  };
  // Envelope first, then the strongest components of the envelope-weighted
  // residual; each candidate frequency seeds a short refinement and the
  // lowest chi-square start wins.
  m.init = [f = m.f, grad = m.grad](std::span<const double> x, std::span<const double> y,
                                    std::span<const double> sigma) {
    const std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end()),
        ss(sigma.begin(), sigma.end());
    const auto [slope, icpt] = log_line(x, y);
    double amp = std::exp(icpt), t2 = slope < 0.0 ? -2.0 / slope : span_of(x);
    {
      const Model& env = find_model("exp_decay");
      try {
        const FitResult r = fit_lm(make_problem(env, xs, ys, ss));
        if (r.converged && r.params[1] > 0.0) {
          amp = r.params[0];
          t2 = r.params[1];
        }
      } catch (const std::exception&) {
      }
    }
    std::vector<double> env(x.size()), res(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      env[i] = amp * std::exp(-2 * x[i] / t2);
      res[i] = y[i] - env[i];
    }
    const double span = span_of(x);
    double step = span;
    for (std::size_t i = 1; i < x.size(); ++i) step = std::min(step, x[i] - x[i - 1]);
    const double f_max = 0.5 / std::max(step, 1e-300), df = 0.25 / span;
    struct Peak {
      double power, f, phase;
    };
    std::vector<Peak> spectrum;
    for (double fr = 0.5 / span; fr <= f_max; fr += df) {
      std::complex<double> acc = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i)
        acc += res[i] * env[i] * std::exp(std::complex<double>(0.0, -2 * constants::pi * fr * x[i]));
      spectrum.push_back({std::norm(acc), fr, std::arg(acc)});
    }
    std::vector<Peak> peaks;
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
      const bool left = k == 0 || spectrum[k].power >= spectrum[k - 1].power;
      const bool right = k + 1 == spectrum.size() || spectrum[k].power >= spectrum[k + 1].power;
      if (left && right) peaks.push_back(spectrum[k]);
    }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.power > b.power; });
    if (peaks.size() > 3) peaks.resize(3);

    std::vector<double> best{amp, t2, peaks.empty() ? 1.0 / span : peaks.front().f, 0.3,
                             peaks.empty() ? 0.0 : peaks.front().phase};
    double best_chi2 = std::numeric_limits<double>::infinity();
    for (const Peak& pk : peaks) {
      for (const double depth : {0.2, 0.5}) {
        FitProblem pb;
        pb.model_name = "exp_decay_beat";
        pb.model = f;
        pb.gradient = grad;
        pb.names = {"amplitude", "T2", "f_osc", "depth", "phase"};
        pb.x = xs;
        pb.y = ys;
        pb.sigma = ss;
        pb.initial = {amp * (1 + depth), t2, pk.f, depth, pk.phase};
        pb.bounds = {kFree, kPositive, kPositive, Bound{0.0, 1.0}, kFree};
        pb.options.max_iterations = 60;
        try {
          const FitResult r = fit_lm(pb);
          if (std::isfinite(r.chi2) && r.chi2 < best_chi2) {
            best_chi2 = r.chi2;
            best = r.params;
          }
        } catch (const std::exception&) {
        }
      }
    }
    return best;
  };
  return m;
}

Model double_exp() {
  Model m;
  m.name = "double_exp";
  m.formula = "offset - amp_short exp(-x / T1_short) - amp_long exp(-x / T1_long)";
  m.x_quantity = "delay (s)";
  m.params = {"offset", "amp_short", "T1_short", "amp_long", "T1_long"};
  m.bounds = {kFree, kFree, kPositive, kFree, kPositive};
  m.f = [](double x, std::span<const double> p) {
    return p[0] - p[1] * std::exp(-x / p[2]) - p[3] * std::exp(-x / p[4]);
  };
  m.grad = [](double x, std::span<const double> p, std::span<double> g) {
    const double e1 = std::exp(-x / p[2]), e2 = std::exp(-x / p[4]);
    g[0] = 1.0;
    g[1] = -e1;
    g[2] = -p[1] * e1 * x / (p[2] * p[2]);
    g[3] = -e2;
    g[4] = -p[3] * e2 * x / (p[4] * p[4]);
  };
  // Peeling: fit the slow tail alone, subtract it, then fit what is left.
  m.init = [](std::span<const double> x, std::span<const double> y, std::span<const double> sigma) {
    const double x0 = x.front(), cut = x0 + 0.25 * (x.back() - x0);
    std::vector<double> tx, ty, ts;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] >= cut) {
        tx.push_back(x[i]);
        ty.push_back(y[i]);
        if (!sigma.empty()) ts.push_back(sigma[i]);
      }
    }
    std::vector<double> tail = recovery_init(tx, ty);
    if (tx.size() > 4) {
      const Model& rec = find_model("recovery_exp");
      FitProblem pb = make_problem(rec, tx, ty, ts);
      try {
        const FitResult r = fit_lm(pb);
        if (r.converged && r.params[2] > 0.0) tail = r.params;
      } catch (const std::exception&) {
      }
    }
    const double a = tail[0], b_long = tail[1], t_long = tail[2];
    std::vector<double> ex, ez;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < cut) {
        ex.push_back(x[i]);
        ez.push_back(a - b_long * std::exp(-x[i] / t_long) - y[i]);
      }
    }
    double b_short = 0.0, t_short = 0.1 * t_long;
    if (ex.size() >= 2) {
      const auto [slope, icpt] = log_line(ex, ez);
      if (slope < 0.0 && -1.0 / slope < t_long) {
        t_short = -1.0 / slope;
        b_short = std::exp(icpt);
      } else {
        b_short = *std::max_element(ez.begin(), ez.end());
      }
    }
    return std::vector<double>{a, b_short, t_short, b_long, t_long};
  };
  return m;
}

Model recovery_exp() {
  Model m;
  m.name = "recovery_exp";
  m.formula = "plateau - step exp(-x / T1)";
  m.x_quantity = "delay (s)";
  m.params = {"plateau", "step", "T1"};
  m.bounds = {kFree, kFree, kPositive};
  m.f = [](double x, std::span<const double> p) { return p[0] - p[1] * std::exp(-x / p[2]); };
  m.grad = [](double x, std::span<const double> p, std::span<double> g) {
    const double e = std::exp(-x / p[2]);
    g[0] = 1.0;
    g[1] = -e;
    g[2] = -p[1] * e * x / (p[2] * p[2]);
  };
  m.init = [](auto x, auto y, auto) { return recovery_init(x, y); };
  return m;
}

// Pump-probe recovery including the radiative refill of the ground state,
// whose time constant is the optical lifetime (held fixed by default).
Model recovery_exp_rad() {
  Model m;
  m.name = "recovery_exp_rad";
  m.formula = "plateau - step exp(-x / T1) - refill exp(-x / T_rad)";
  m.x_quantity = "delay (s)";
  m.params = {"plateau", "step", "T1", "refill", "T_rad"};
  m.bounds = {kFree, kFree, kPositive, kFree, kPositive};
  m.fixed = {false, false, false, false, true};
  m.f = [](double x, std::span<const double> p) {
    return p[0] - p[1] * std::exp(-x / p[2]) - p[3] * std::exp(-x / p[4]);
  };
  m.grad = [](double x, std::span<const double> p, std::span<double> g) {
    const double e1 = std::exp(-x / p[2]), e2 = std::exp(-x / p[4]);
    g[0] = 1.0;
    g[1] = -e1;
    g[2] = -p[1] * e1 * x / (p[2] * p[2]);
    g[3] = -e2;
    g[4] = -p[3] * e2 * x / (p[4] * p[4]);
  };
  m.init = [](auto x, auto y, auto) {
    const auto r = recovery_init(x, y);
    return std::vector<double>{r[0], r[1], r[2], 0.0, 3.4e-3};
  };
  return m;
}

Model eq1_gamma_hom() {
  Model m;
  m.name = "eq1_gamma_hom";
  m.formula = "gamma0 + alpha_linear T + alpha_orbach exp(-dE / k_B T)";
  m.x_quantity = "temperature (K)";
  m.params = {"gamma0_Hz", "alpha_linear_Hz_per_K", "alpha_orbach_Hz", "dE_meV"};
  m.bounds = {kFree, kFree, kPositive, kPositive};
  m.f = [](double t, std::span<const double> p) {
    const double de = p[3] * 1e-3 * constants::e;
    return p[0] + p[1] * t + p[2] * std::exp(-de / (constants::k_B * t));
  };
  m.grad = [](double t, std::span<const double> p, std::span<double> g) {
    const double k = 1e-3 * constants::e / (constants::k_B * t);
    const double e = std::exp(-p[3] * k);
    g[0] = 1.0;
    g[1] = t;
    g[2] = e;
    g[3] = -p[2] * e * k;
  };
  // The model is linear in the first three parameters, so scan the
  // activation energy and solve the rest by weighted least squares.
  m.init = [](std::span<const double> t, std::span<const double> y, std::span<const double> s) {
    const auto n = static_cast<Eigen::Index>(t.size());
    std::vector<double> best{*std::min_element(y.begin(), y.end()), 0.0, 0.0, 1.0};
    double best_chi2 = kInf;
    for (double de_mev = 0.05; de_mev <= 50.0; de_mev *= 1.05) {
      Eigen::MatrixXd a(n, 3);
      Eigen::VectorXd b(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        const double w = s.empty() ? 1.0 : 1.0 / s[iu];
        a(i, 0) = w;
        a(i, 1) = w * t[iu];
        a(i, 2) = w * std::exp(-de_mev * 1e-3 * constants::e / (constants::k_B * t[iu]));
        b(i) = w * y[iu];
      }
      const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
      if (!c.allFinite() || !(c(2) > 0.0)) continue;
      const double chi2 = (a * c - b).squaredNorm();
      if (chi2 < best_chi2) {
        best_chi2 = chi2;
        best = {c(0), c(1), c(2), de_mev};
      }
    }
    return best;
  };
  return m;
}

Model eq3_line() {
  Model m;
  m.name = "eq3_line";
  m.formula = "rate_bath + slope x, x = sin^2(theta/2)";
  m.x_quantity = "sin^2 of half the refocusing angle";
  m.params = {"rate_bath", "slope"};
  m.bounds = {kFree, kFree};
  m.f = [](double x, std::span<const double> p) { return p[0] + p[1] * x; };
  m.grad = [](double x, std::span<const double>, std::span<double> g) {
    g[0] = 1.0;
    g[1] = x;
  };
  m.init = [](std::span<const double> x, std::span<const double> y, std::span<const double> s) {
    const auto lf = fit_linear_weighted(x, y, s);
    return std::vector<double>{lf.intercept, lf.slope};
  };
  return m;
}

SpinT1Params t1_params(std::span<const double> p) {
  SpinT1Params q;
  q.A_o = p[0];
  q.A_d = p[1];
  q.R_o = p[2];
  q.g = p[3];
  q.temperature_K = p[4];
  return q;
}

Model eq4_t1() {
  Model m;
  m.name = "eq4_t1";
  m.formula = "A_o g^4 sech^2(x) + A_d (g mu_B B / h)^5 coth(x) + R_o, x = g mu_B B / 2 k_B T";
  m.x_quantity = "magnetic field (T), y = 1/T1 (1/s)";
  m.params = {"A_o", "A_d", "R_o", "g", "temperature_K"};
  m.bounds = {kPositive, kPositive, kPositive, kPositive, kPositive};
  // A_o and R_o are nearly degenerate at fields where sech^2 ~ 1; R_o is
  // held at zero unless released.
  m.fixed = {false, false, true, true, true};
  m.f = [](double b, std::span<const double> p) {
    SpinT1Params q = t1_params(p);
    return flipflop_term(q, b) + direct_term(q, b) + q.R_o;
  };
  m.grad = [](double b, std::span<const double> p, std::span<double> g) {
    SpinT1Params unit = t1_params(p);
    unit.A_o = 1.0;
    unit.A_d = 1.0;
    g[0] = flipflop_term(unit, b);
    g[1] = direct_term(unit, b);
    g[2] = 1.0;
    for (int k = 3; k < 5; ++k) {
      std::vector<double> hi(p.begin(), p.end()), lo(p.begin(), p.end());
      const double h = 1e-6 * std::abs(p[static_cast<std::size_t>(k)]);
      hi[static_cast<std::size_t>(k)] += h;
      lo[static_cast<std::size_t>(k)] -= h;
      const SpinT1Params qh = t1_params(hi), ql = t1_params(lo);
      g[static_cast<std::size_t>(k)] =
          (flipflop_term(qh, b) + direct_term(qh, b) - flipflop_term(ql, b) - direct_term(ql, b)) / (2 * h);
    }
  };
  m.init = [](std::span<const double> b, std::span<const double> y, std::span<const double> s) {
    // Weighted linear least squares in (A_o, A_d) with R_o = 0.
    SpinT1Params unit;
    unit.A_o = 1.0;
    unit.A_d = 1.0;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(b.size()), 2);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double w = s.empty() ? 1.0 : 1.0 / s[i];
      const auto ii = static_cast<Eigen::Index>(i);
      a(ii, 0) = w * flipflop_term(unit, b[i]);
      a(ii, 1) = w * direct_term(unit, b[i]);
      rhs(ii) = w * y[i];
    }
    Eigen::VectorXd sol = a.colPivHouseholderQr().solve(rhs);
    const double ymin = *std::min_element(y.begin(), y.end());
    const double ff = flipflop_term(unit, 0.0);
    double a_o = sol(0) > 0.0 ? sol(0) : 0.5 * ymin / ff;
    double bmax = *std::max_element(b.begin(), b.end());
    double a_d = sol(1) > 0.0 ? sol(1) : 0.1 * ymin / std::max(direct_term(unit, bmax), 1e-300);
    return std::vector<double>{a_o, a_d, 0.0, unit.g, unit.temperature_K};
  };
  return m;
}

std::vector<Model> build_registry() {
  return {lorentzian(),       gaussian(),    exp_decay(), exp_decay_beat(), double_exp(), recovery_exp(),
          recovery_exp_rad(), eq1_gamma_hom(), eq3_line(), eq4_t1()};
}

const std::vector<Model>& registry() {
  static const std::vector<Model> r = build_registry();
  return r;
}

}  // namespace

std::size_t Model::index(std::string_view param) const {
  for (std::size_t k = 0; k < params.size(); ++k)
    if (params[k] == param) return k;
  throw DomainError("model " + name + " has no parameter '" + std::string(param) + "'");
}

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& m : registry()) n.push_back(m.name);
    return n;
  }();
  return names;
}

const Model& find_model(std::string_view name) {
  for (const auto& m : registry())
    if (m.name == name) return m;
  throw DomainError("unknown model '" + std::string(name) + "'");
}

FitProblem make_problem(const Model& model, std::vector<double> x, std::vector<double> y,
                        std::vector<double> sigma, const ProblemOverrides& ov) {
  if (x.size() != y.size() || x.empty()) throw DomainError("x and y must be non-empty and equal in length");
  FitProblem pb;
  pb.model_name = model.name;
  pb.model = model.f;
  pb.gradient = model.grad;
  pb.names = model.params;
  pb.bounds = model.bounds;
  pb.fixed = model.fixed.empty() ? std::vector<bool>(model.params.size(), false) : model.fixed;
  for (const auto& [name, b] : ov.bounds) pb.bounds[model.index(name)] = b;
  for (const auto& name : ov.fix) pb.fixed[model.index(name)] = true;
  for (const auto& name : ov.release) pb.fixed[model.index(name)] = false;
  pb.initial = model.init(x, y, sigma);
  for (const auto& [name, v] : ov.init) pb.initial[model.index(name)] = v;
  // Keep the automatic guess inside user-supplied bounds.
  for (std::size_t k = 0; k < pb.initial.size(); ++k) {
    if (ov.init.count(model.params[k])) continue;
    const Bound& b = pb.bounds[k];
    if (pb.initial[k] < b.lo || pb.initial[k] > b.hi || !std::isfinite(pb.initial[k])) {
      double v = pb.initial[k];
      if (!std::isfinite(v)) v = std::isfinite(b.lo) ? b.lo : 0.0;
      if (std::isfinite(b.lo) && std::isfinite(b.hi))
        v = std::clamp(v, b.lo + 1e-3 * (b.hi - b.lo), b.hi - 1e-3 * (b.hi - b.lo));
      else if (v < b.lo)
        v = b.lo + std::max(1e-3 * std::abs(b.lo), 1e-12);
      else if (v > b.hi)
        v = b.hi - std::max(1e-3 * std::abs(b.hi), 1e-12);
      pb.initial[k] = v;
    }
  }
  pb.x = std::move(x);
  pb.y = std::move(y);
  pb.sigma = std::move(sigma);
  return pb;
}

std::vector<double> evaluate(const Model& model, std::span<const double> params, std::span<const double> x) {
  if (params.size() != model.params.size()) throw DomainError("parameter count does not match model " + model.name);
  std::vector<double> out;
  out.reserve(x.size());
  for (double xi : x) out.push_back(model.f(xi, params));
  return out;
}

}  // namespace kramers::fit
