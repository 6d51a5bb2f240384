// Acceptance criteria runner: one PASS/FAIL line per criterion. Arguments
// select criteria by id (C01..C10); no arguments runs all of them.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "kramers/crystal_field.hpp"
#include "kramers/dynamics.hpp"
#include "kramers/fit/linear.hpp"
#include "kramers/fit/lm.hpp"
#include "kramers/fit/models.hpp"
#include "kramers/io/config.hpp"
#include "kramers/io/scenario.hpp"
#include "kramers/physics/units.hpp"
#include "kramers/pulse_sim.hpp"
#include "kramers/spin_hamiltonian.hpp"

using namespace kramers;

namespace {

constexpr double kPi = 3.141592653589793;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records one sub-check; the criterion passes only if all of them do.
  void expect(bool ok, const std::string& what) {
    pass = pass && ok;
    if (detail.tellp() > 0) detail << "; ";
    detail << what << (ok ? "" : " [fail]");
  }
};

std::string g5(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.5g", v);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  double normal() {
    const double u1 = (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return std::sqrt(-2 * std::log(u1)) * std::cos(2 * kPi * u2);
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  std::uint64_t state_;
};

void unit_arithmetic(Outcome& o) {
  const double g = 6.828;
  const double f = convert({1530.74, Unit::nm}, Unit::THz).value;
  o.expect(rel(f, 195.85) <= 5e-4, "1530.74 nm = " + g5(f) + " THz");
  const double b = convert({9.7, Unit::GHz}, Unit::T, g).value;
  o.expect(rel(b, 0.102) <= 5e-3, "9.7 GHz -> " + g5(b) + " T");
  const double lw = convert({2.57, Unit::mT}, Unit::MHz, g).value;
  o.expect(rel(lw, 244.9) <= 1e-2, "2.57 mT -> " + g5(lw) + " MHz");
  const double beat = convert({0.35, Unit::G}, Unit::MHz, g).value;
  o.expect(std::abs(beat - 3.33) <= 0.23, "0.35 G -> " + g5(beat) + " MHz");
}

void boltzmann(Outcome& o) {
  const auto pops = boltzmann_populations(LevelScheme::measured_levels(), Multiplet::Z, 3.6);
  double p = -1;
  for (const auto& q : pops)
    if (q.label == "Z2") p = q.fraction;
  o.expect(p >= 0.007 && p <= 0.010, "p(Z2, 3.6 K) = " + g5(100 * p) + " %");
}

void linewidth_algebra(Outcome& o) {
  const double optical = linewidth_from_T2(720e-9);
  o.expect(rel(optical, 442.1e3) <= 5e-3, "1/(pi 720 ns) = " + g5(optical) + " Hz");
  const double lifetime = linewidth_from_T2(3.4e-3);
  o.expect(std::abs(lifetime - 94) <= 0.5, "1/(pi 3.4 ms) = " + g5(lifetime) + " Hz");
  const double sep = mean_ion_separation(MaterialSample::ceria_default());
  o.expect(rel(sep, 14.7e-9) <= 0.1, "separation at 3 ppm = " + g5(sep * 1e9) + " nm");
}

void instantaneous_diffusion(Outcome& o) {
  const double n = 1.66e22, t2_bath = 0.66e-6, g = 6.828;
  std::vector<double> s2, rate;
  for (double deg : {60.0, 120.0, 180.0}) {
    const InstDiffusionParams p{g, n, deg * kPi / 180, t2_bath};
    const EchoTrace t = simulate_generalized_echo(p, uniform_grid(10e-9, 1e-6, 60));
    const fit::FitResult r = fit::fit_lm(fit::make_problem(fit::find_model("exp_decay"), t.tau_s, t.value, {}));
    const double s = std::sin(p.theta / 2);
    s2.push_back(s * s);
    rate.push_back(1.0 / r.value("T2"));
  }
  const fit::LinearFit line = fit::fit_linear_weighted(s2, rate);
  const double t2 = 1.0 / line.intercept;
  const double density = line.slope / inst_diffusion_constant(g);
  o.expect(rel(t2, t2_bath) <= 0.02, "intercept T2 = " + g5(t2 * 1e6) + " us");
  o.expect(rel(density, n) <= 0.02, "slope density = " + g5(density) + " m^-3");
  const double ppm = density_to_ppm(density, 2.524e28, 0.12);
  o.expect(ppm >= 5.2 && ppm <= 6.0, "ppm at 12 % probed = " + g5(ppm));
}

void monte_carlo(Outcome& o) {
  auto run = [](double density) {
    McDiffusionSpec spec;
    spec.density_m3 = density;
    spec.theta = kPi;
    spec.n_spins = 1000;
    spec.n_realizations = 200;
    spec.seed = 20240601;
    spec.tau_s = uniform_grid(0, 3e-6 * 1.66e22 / density, 31);
    return monte_carlo_instantaneous_diffusion(spec).rate_per_s;
  };
  const double formula = inst_diffusion_term({6.828, 1.66e22, kPi, 0.0});
  const double mc = run(1.66e22);
  o.expect(rel(mc, formula) <= 0.15, "MC rate " + g5(mc) + " vs formula " + g5(formula) + " 1/s");
  std::vector<double> dens, rates;
  for (double d : {1.66e21, 3.6e21, 7.7e21, 1.66e22}) {
    dens.push_back(d);
    rates.push_back(d == 1.66e22 ? mc : run(d));
  }
  const fit::LinearFit line = fit::fit_linear_weighted(dens, rates);
  double mean = 0, ss_tot = 0, ss_res = 0;
  for (double r : rates) mean += r / static_cast<double>(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) {
    ss_tot += (rates[i] - mean) * (rates[i] - mean);
    const double e = rates[i] - (line.slope * dens[i] + line.intercept);
    ss_res += e * e;
  }
  const double r2 = 1 - ss_res / ss_tot;
  o.expect(r2 > 0.99, "R^2 over a decade = " + g5(r2));
}

void spin_hamiltonian(Outcome& o) {
  auto max_dev = [](double a_Hz) {
    SpinSystem sys;
    sys.hyperfine_Hz = a_Hz;
    const auto pert = resonance_fields_perturbative(sys, 9.7e9, 2);
    const auto exact = resonance_fields_exact(sys, 9.7e9);
    double dev = 0.0;
    for (const auto& p : pert)
      for (const auto& e : exact)
        if (e.m_I == p.m_I) dev = std::max(dev, std::abs(e.field_T - p.field_T));
    return dev;
  };
  const double full = max_dev(75e6), half = max_dev(37.5e6);
  o.expect(full < 0.05e-3, "second order vs exact at 75 MHz = " + g5(full * 1e3) + " mT");
  o.expect(full / half >= 8, "shrinks x" + g5(full / half) + " when A halves");
  const double share = odd_isotope_signal_share(SpinSystem{});
  o.expect(std::abs(share - 0.036) <= 0.005, "odd-isotope share = " + g5(100 * share) + " %");
}

void linewidth_temperature_fit(Outcome& o) {
  const fit::Model& m = fit::find_model("eq1_gamma_hom");
  const std::vector<double> truth{200e3, 25.5e3, 1.112e8, 2.05};
  const auto x = uniform_grid(3.6, 5.5, 39);
  const auto clean = fit::evaluate(m, truth, x);
  auto fit_seed = [&](std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> y = clean, s;
    for (double& v : y) {
      s.push_back(0.02 * v);
      v += 0.02 * v * rng.normal();
    }
    fit::ProblemOverrides ov;
    ov.init["alpha_linear_Hz_per_K"] = truth[1];
    ov.fix.insert("alpha_linear_Hz_per_K");
    return fit::fit_lm(fit::make_problem(m, x, y, s, ov));
  };
  const fit::FitResult r = fit_seed(20240601);
  const double de = r.value("dE_meV");
  o.expect(r.converged && rel(de, 2.05) <= 0.1, "dE = " + g5(de) + " meV");
  HomLinewidthParams p{r.value("gamma0_Hz"), r.value("alpha_linear_Hz_per_K"), r.value("alpha_orbach_Hz"),
                       mev_to_joule(de)};
  const double orbach = orbach_term(p, 3.6);
  o.expect(rel(orbach, 150e3) <= 0.15, "Orbach term at 3.6 K = " + g5(orbach * 1e-3) + " kHz");
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const fit::FitResult e = fit_seed(seed);
    ok += e.converged && rel(e.value("dE_meV"), 2.05) <= 0.1 ? 1 : 0;
  }
  o.detail << " (dE within 10 % for " << ok << "/50 noise seeds)";
}

void field_t1_fit(Outcome& o) {
  const std::vector<double> b{0.05, 0.1, 0.25}, t1{1.575e-3, 1.106e-3, 0.4345e-3}, err{0.256e-3, 0.256e-3, 0.087e-3};
  std::vector<double> rate, sigma;
  for (std::size_t i = 0; i < b.size(); ++i) {
    rate.push_back(1 / t1[i]);
    sigma.push_back(err[i] / (t1[i] * t1[i]));
  }
  const fit::Model& m = fit::find_model("eq4_t1");
  const fit::FitResult r = fit::fit_lm(fit::make_problem(m, b, rate, sigma));
  bool within = true;
  std::ostringstream pts;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double model_t1 = 1 / m.f(b[i], r.params);
    within = within && std::abs(model_t1 - t1[i]) <= err[i];
    pts << (i ? ", " : "") << g5(model_t1 * 1e3);
  }
  o.expect(r.converged && within, "curve T1 at 50/100/250 mT = " + pts.str() + " ms");
  const double t0 = 1 / m.f(0.0, r.params);
  o.expect(t0 >= 2e-3 && t0 <= 3e-3, "T1(0) = " + g5(t0 * 1e3) + " ms");
}

void recovery_fits(Outcome& o) {
  RecoverySpec spec;
  spec.components = {{0.5, 0.11e-3}, {0.5, 0.83e-3}};
  spec.tau_s = uniform_grid(5e-6, 4e-3, 200);
  spec.noise_sigma = 0.02;
  spec.seed = 20240601;
  const EchoTrace t = simulate_inversion_recovery(spec);
  const fit::FitResult r = fit::fit_lm(fit::make_problem(fit::find_model("double_exp"), t.tau_s, t.value, t.sigma));
  const double ts = r.value("T1_short"), tl = r.value("T1_long");
  o.expect(r.converged && rel(ts, 0.11e-3) <= 0.1, "T1 short = " + g5(ts * 1e3) + " ms");
  o.expect(r.converged && rel(tl, 0.83e-3) <= 0.1, "T1 long = " + g5(tl * 1e3) + " ms");

  PumpProbeSpec pp;
  pp.system = RateSystem::thermal(1.106e-3, 0.1, 6.828, 3.6);
  const EchoTrace d = simulate_pump_probe(pp, uniform_grid(0, 8e-3, 81));
  const fit::FitResult q = fit::fit_lm(fit::make_problem(fit::find_model("recovery_exp_rad"), d.tau_s, d.value, {}));
  const double t1 = q.value("T1");
  o.expect(q.converged && rel(t1, 1.106e-3) <= 0.02, "pump-probe T1_eff = " + g5(t1 * 1e3) + " ms");
}

void fit_engine(Outcome& o) {
  Rng rng(7);
  double worst_lin = 0.0;
  int worst_steps = 0;
  for (int trial = 0; trial < 50; ++trial) {
    fit::FitProblem pb;
    pb.model = [](double x, std::span<const double> p) { return p[0] * x + p[1]; };
    for (int i = 0; i < 20; ++i) {
      pb.x.push_back(rng.uniform(-3, 3));
      pb.sigma.push_back(rng.uniform(0.1, 1));
      pb.y.push_back(1.7 * pb.x.back() - 0.4 + pb.sigma.back() * rng.normal());
    }
    pb.initial = {0, 0};
    const fit::FitResult r = fit::fit_lm(pb);
    const fit::LinearFit ref = fit::fit_linear_weighted(pb.x, pb.y, pb.sigma);
    worst_lin = std::max({worst_lin, rel(r.params[0], ref.slope), rel(r.params[1], ref.intercept)});
    worst_steps = std::max(worst_steps, r.iterations);
  }
  o.expect(worst_lin <= 1e-8 && worst_steps <= 2,
           "LM vs closed form " + g5(worst_lin) + " in <= " + std::to_string(worst_steps) + " steps");

  double worst_jac = 0.0;
  bool monotone = true;
  for (const char* name : {"exp_decay", "lorentzian"}) {
    const fit::Model& m = fit::find_model(name);
    const bool decay = std::string(name) == "exp_decay";
    for (int trial = 0; trial < 20; ++trial) {
      const std::vector<double> p = decay ? std::vector<double>{rng.uniform(0.5, 2), rng.uniform(1e-7, 1e-5)}
                                          : std::vector<double>{rng.uniform(0.5, 2), rng.uniform(-1e9, 1e9),
                                                                rng.uniform(3e9, 15e9), rng.uniform(-0.1, 0.1)};
      const auto x = decay ? uniform_grid(0, 3 * p[1], 40) : uniform_grid(-40e9, 40e9, 81);
      fit::FitProblem pb = fit::make_problem(m, x, fit::evaluate(m, p, x), {});
      for (double& y : pb.y) y += 0.02 * rng.normal();
      const Eigen::MatrixXd ja = fit::model_jacobian(pb, p, true), jn = fit::model_jacobian(pb, p, false);
      for (Eigen::Index k = 0; k < ja.cols(); ++k) {
        const double scale = ja.col(k).cwiseAbs().maxCoeff();
        if (scale > 0) worst_jac = std::max(worst_jac, (ja.col(k) - jn.col(k)).cwiseAbs().maxCoeff() / scale);
      }
      const fit::FitResult r = fit::fit_lm(pb);
      for (std::size_t k = 1; k < r.chi2_history.size(); ++k)
        monotone = monotone && r.chi2_history[k] <= r.chi2_history[k - 1];
    }
  }
  o.expect(worst_jac <= 1e-5, "FD vs analytic Jacobian " + g5(worst_jac));
  o.expect(monotone, "chi2 monotone over accepted steps");

  auto report = [](const std::string& stamp) {
    io::RunOptions opt;
    opt.timestamp = stamp;
    opt.base_dir = io::bundled_scenario_dir();
    std::string json = io::run_scenario(io::Config::load(io::bundled_scenario_dir() / "paper-repro.cfg"), opt).json;
    std::istringstream in(json);
    std::string out, line;
    while (std::getline(in, line))
      if (line.find("\"generated_at\"") == std::string::npos) out += line + "\n";
    return out;
  };
  const bool same = report("2024-01-01T00:00:00Z") == report("2025-06-30T12:00:00Z");
  o.expect(same, "reproduce reports identical modulo timestamp");
}

struct Criterion {
  const char* id;
  const char* title;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"C01", "unit arithmetic", unit_arithmetic},
      {"C02", "Boltzmann population", boltzmann},
      {"C03", "linewidth algebra", linewidth_algebra},
      {"C04", "instantaneous-diffusion pipeline", instantaneous_diffusion},
      {"C05", "Monte-Carlo instantaneous diffusion", monte_carlo},
      {"C06", "spin Hamiltonian", spin_hamiltonian},
      {"C07", "linewidth temperature fit", linewidth_temperature_fit},
      {"C08", "field-dependent T1 fit", field_t1_fit},
      {"C09", "recovery fits", recovery_fits},
      {"C10", "fit-engine properties", fit_engine},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  for (const auto& w : wanted)
    if (std::none_of(all.begin(), all.end(), [&](const Criterion& c) { return w == c.id; })) {
      std::cerr << "unknown criterion '" << w << "'\n";
      return 64;
    }
  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    Outcome o;
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.expect(false, std::string("error: ") + e.what());
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.id << " " << c.title << ": " << o.detail.str() << "\n";
  }
  return failures == 0 ? 0 : 1;
}
