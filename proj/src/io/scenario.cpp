#include "kramers/io/scenario.hpp"

#include <cstdio>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <random>

#include "json.hpp"
#include "kramers/dynamics.hpp"
#include "kramers/errors.hpp"
#include "kramers/fit/linear.hpp"
#include "kramers/fit/models.hpp"
#include "kramers/io/trace_file.hpp"
#include "kramers/physics/constants.hpp"
#include "kramers/physics/units.hpp"
#include "kramers/pulse_sim.hpp"

#ifndef KRAMERS_SCENARIO_DIR
#define KRAMERS_SCENARIO_DIR "scenarios"
#endif

namespace kramers::io {
namespace {

using Json = nlohmann::ordered_json;
constexpr double kDeg = constants::pi / 180.0;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt(double v) { return format_number(v); }

// Six significant digits for human-facing messages.
std::string brief(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

class Runner {
 public:
  Runner(const Config& cfg, const RunOptions& opt) : cfg_(cfg), opt_(opt) {}

  ScenarioReport run();

 private:
  const Config& cfg_;
  const RunOptions& opt_;
  ScenarioReport rep_;
  std::map<std::string, std::size_t> index_;

  // --- argument helpers -----------------------------------------------------
  const StepOutput& step_named(const std::string& name, int line) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("line " + std::to_string(line) + ": unknown step '" + name + "'");
    return rep_.steps[it->second];
  }

  double resolve(const std::string& text, int line) const {
    if (text.empty() || text.front() != '@') return parse_si_value(text, line);
    const auto dot = text.find('.');
    if (dot == std::string::npos)
      throw ValidationError("line " + std::to_string(line) + ": reference '" + text + "' needs the form @step.key");
    const StepOutput& s = step_named(text.substr(1, dot - 1), line);
    const std::string key = text.substr(dot + 1);
    if (const Value* v = s.find(key)) return v->value;
    throw ValidationError("line " + std::to_string(line) + ": step '" + s.name + "' has no value '" + key + "'");
  }

  double arg(const ConfigSection& s, std::string_view key) const {
    const auto& e = s.entry(key);
    return resolve(e.value, e.line);
  }
  double arg_or(const ConfigSection& s, std::string_view key, double fallback) const {
    return s.has(key) ? arg(s, key) : fallback;
  }

  const Dataset& dataset(const ConfigSection& s, std::string_view key) const {
    const auto& e = s.entry(key);
    if (e.value.empty() || e.value.front() != '@')
      throw ValidationError("line " + std::to_string(e.line) + ": '" + e.key + "' must reference a step (@name)");
    const StepOutput& src = step_named(e.value.substr(1), e.line);
    if (!src.data) throw ValidationError("line " + std::to_string(e.line) + ": step '" + src.name + "' has no data");
    return *src.data;
  }

  // Either `<p> = list [unit]` or `<p>_start`, `<p>_stop`, `<p>_points`.
  std::vector<double> grid(const ConfigSection& s, const std::string& p) const {
    if (s.has(p)) return s.si_list(p);
    if (!s.has(p + "_start")) throw ParseError(s.line, "section [" + s.name + "] needs '" + p + "' or '" + p + "_start'");
    return uniform_grid(s.si(p + "_start"), s.si(p + "_stop"), static_cast<int>(s.integer(p + "_points")));
  }

  std::uint64_t seed_for(const ConfigSection& s, std::size_t step_index) const {
    if (s.has("seed")) return static_cast<std::uint64_t>(s.integer("seed"));
    return derive_seed(rep_.seed, step_index);
  }

  // --- steps ----------------------------------------------------------------
  void put(StepOutput& out, const std::string& key, double v, std::string unit, const std::string& prov) {
    if (!std::isfinite(v)) throw NumericalError("step '" + out.name + "' produced a non-finite " + key);
    out.values.emplace_back(key, Value{v, std::move(unit), prov});
  }

  void run_step(const ConfigSection& s, StepOutput& out, std::size_t idx);
  void step_convert(const ConfigSection& s, StepOutput& out, const std::string& prov);
  void step_boltzmann(const ConfigSection& s, StepOutput& out, const std::string& prov);
  void step_pl(const ConfigSection& s, StepOutput& out, const std::string& prov);
  void step_separation(const ConfigSection& s, StepOutput& out, const std::string& prov);
  void step_epr(const ConfigSection& s, StepOutput& out, const std::string& prov);
  void step_hyperfine(const ConfigSection& s, StepOutput& out, const std::string& prov);
  void step_echo(const ConfigSection& s, StepOutput& out, const std::string& prov, std::uint64_t seed);
  void step_id_series(const ConfigSection& s, StepOutput& out, const std::string& prov, std::uint64_t seed);
  void step_recovery(const ConfigSection& s, StepOutput& out, const std::string& prov, std::uint64_t seed);
  void step_pump_probe(const ConfigSection& s, StepOutput& out, const std::string& prov, std::uint64_t seed);
  void step_mc(const ConfigSection& s, StepOutput& out, const std::string& prov, std::uint64_t seed);
  void step_generate(const ConfigSection& s, StepOutput& out, const std::string& prov, std::uint64_t seed);
  void step_dataset(const ConfigSection& s, StepOutput& out, const std::string& prov);
  void step_fit(const ConfigSection& s, StepOutput& out, const std::string& prov);
  void step_fit_linear(const ConfigSection& s, StepOutput& out, const std::string& prov);
  void step_derive(const ConfigSection& s, StepOutput& out, const std::string& prov);

  SpinSystem spin_for(const ConfigSection& s) const {
    SpinSystem sys = spin_from_config(cfg_);
    if (s.has("g")) sys.g = arg(s, "g");
    if (s.has("hyperfine")) sys.hyperfine_Hz = arg(s, "hyperfine");
    if (s.has("nuclear_spin")) sys.nuclear_spin = arg(s, "nuclear_spin");
    if (s.has("odd_abundance")) sys.odd_abundance = arg(s, "odd_abundance");
    if (s.has("line_fwhm")) sys.line_fwhm_T = arg(s, "line_fwhm");
    sys.validate();
    return sys;
  }

  void check(const ConfigSection& s);
  void write_outputs();
  Json to_json() const;
};

void Runner::step_convert(const ConfigSection& s, StepOutput& out, const std::string& prov) {
  const Unit from = parse_unit(s.text("from"));
  const Unit to = parse_unit(s.text("to"));
  std::optional<double> g;
  if (s.has("g")) g = arg(s, "g");
  const Quantity q = convert(Quantity(arg(s, "value"), from), to, g);
  put(out, "result", q.value, std::string(symbol(to)), prov);
}

void Runner::step_boltzmann(const ConfigSection& s, StepOutput& out, const std::string& prov) {
  const LevelScheme scheme = levels_from_config(cfg_);
  const std::string m = s.text_or("multiplet", "Z");
  if (m != "Z" && m != "Y") throw ValidationError("multiplet must be Z or Y");
  const double t = arg(s, "temperature");
  for (const auto& p : boltzmann_populations(scheme, m == "Z" ? Multiplet::Z : Multiplet::Y, t))
    put(out, "p_" + p.label, p.fraction, "1", prov);
}

void Runner::step_pl(const ConfigSection& s, StepOutput& out, const std::string& prov) {
  const LevelScheme scheme = levels_from_config(cfg_);
  const double t = arg(s, "temperature");
  const double res = arg_or(s, "resolution", 9.0e9);
  const PlSpectrum pl = synthesize_pl_spectrum(scheme, t, res);
  const double threshold = arg_or(s, "threshold", 0.05);
  double y1 = 0.0, y2 = 0.0, strongest = 0.0;
  std::string strongest_label;
  for (const auto& l : pl.lines) {
    if (l.upper == "Y1") y1 = std::max(y1, l.amplitude);
    if (l.upper == "Y2") y2 = std::max(y2, l.amplitude);
    if (l.amplitude > strongest) {
      strongest = l.amplitude;
      strongest_label = l.upper + "-" + l.lower;
    }
  }
  int above = 0;
  for (const auto& l : pl.lines) above += l.amplitude >= threshold * strongest ? 1 : 0;
  put(out, "lines", static_cast<double>(pl.lines.size()), "1", prov);
  put(out, "lines_above_threshold", above, "1", prov);
  if (y1 > 0.0) put(out, "y2_to_y1", y2 / y1, "1", prov);
  Dataset d;
  d.x_header = "frequency_Hz";
  d.y_header = "intensity";
  d.x = pl.frequency_Hz;
  d.y = pl.intensity;
  d.provenance = prov;
  out.data = std::move(d);
}

void Runner::step_separation(const ConfigSection& s, StepOutput& out, const std::string& prov) {
  MaterialSample sample = sample_from_config(cfg_);
  if (s.has("ppm")) sample.dopant_ppm = arg(s, "ppm");
  if (s.has("lattice")) sample.cation_density_m3 = fluorite_cation_density(arg(s, "lattice"));
  sample.validate();
  put(out, "cation_density", sample.cation_density_m3, "1/m^3", prov);
  put(out, "dopant_density", sample.cation_density_m3 * sample.dopant_ppm * 1e-6, "1/m^3", prov);
  put(out, "separation", mean_ion_separation(sample), "m", prov);
}

void Runner::step_epr(const ConfigSection& s, StepOutput& out, const std::string& prov) {
  const SpinSystem sys = spin_for(s);
  const double f = arg(s, "frequency");
  const double b0 = resonance_field_T(f, sys.g);
  FieldRange range{arg_or(s, "field_lo", b0 * 0.8), arg_or(s, "field_hi", b0 * 1.2),
                   static_cast<int>(s.integer_or("points", 2001))};
  const EprSpectrum spec = synthesize_epr_spectrum(sys, f, range);
  put(out, "center_field", b0, "T", prov);
  put(out, "odd_share", odd_isotope_signal_share(sys), "1", prov);
  put(out, "lines", static_cast<double>(spec.registry.size()), "1", prov);
  put(out, "maxima", count_local_maxima(spec.intensity), "1", prov);
  double nearest = std::numeric_limits<double>::infinity();
  for (const auto& l : spec.registry)
    if (l.isotope != "even") nearest = std::min(nearest, std::abs(l.field_T - b0));
  if (std::isfinite(nearest)) put(out, "nearest_hyperfine_offset", nearest, "T", prov);
  for (const auto& w : spec.warnings) rep_.warnings.push_back(out.name + ": " + w);
  Dataset d;
  d.x_header = "field_mT";
  d.y_header = "intensity_per_mT";
  d.x = spec.field_mT;
  d.y = spec.intensity;
  d.provenance = prov;
  out.data = std::move(d);
}

void Runner::step_hyperfine(const ConfigSection& s, StepOutput& out, const std::string& prov) {
  SpinSystem sys = spin_for(s);
  const double f = arg(s, "frequency");
  auto max_dev = [&](const SpinSystem& sy) {
    const auto pert = resonance_fields_perturbative(sy, f, 2);
    const auto exact = resonance_fields_exact(sy, f);
    double dev = 0.0;
    for (const auto& p : pert)
      for (const auto& e : exact)
        if (e.m_I == p.m_I) dev = std::max(dev, std::abs(e.field_T - p.field_T));
    return dev;
  };
  const double full = max_dev(sys);
  SpinSystem half = sys;
  half.hyperfine_Hz /= 2;
  const double halved = max_dev(half);
  put(out, "max_deviation", full, "T", prov);
  put(out, "max_deviation_half", halved, "T", prov);
  put(out, "shrink_ratio", halved > 0.0 ? full / halved : 0.0, "1", prov);
}

void Runner::step_echo(const ConfigSection& s, StepOutput& out, const std::string& prov, std::uint64_t seed) {
  EchoDecaySpec spec;
  spec.T2_s = arg(s, "T2");
  spec.beat.frequency_Hz = arg_or(s, "f_osc", 0.0);
  spec.beat.depth = arg_or(s, "depth", 0.0);
  spec.beat.phase = arg_or(s, "phase", 0.0);
  spec.tau_s = grid(s, "tau");
  const std::string conv = s.text_or("convention", "amplitude");
  if (conv != "amplitude" && conv != "intensity") throw ValidationError("convention must be amplitude or intensity");
  spec.convention = conv == "amplitude" ? EchoConvention::Amplitude : EchoConvention::Intensity;
  spec.amplitude = arg_or(s, "amplitude", 1.0);
  spec.noise_sigma = arg_or(s, "noise", 0.0);
  spec.seed = seed;
  const EchoTrace t = simulate_echo_decay(spec);
  out.data = Dataset{"tau_s", conv, t.tau_s, t.value, spec.noise_sigma > 0.0 ? t.sigma : std::vector<double>{}, prov};
}

void Runner::step_id_series(const ConfigSection& s, StepOutput& out, const std::string& prov, std::uint64_t seed) {
  InstDiffusionParams p;
  p.g = arg_or(s, "g", spin_from_config(cfg_).g);
  p.density_m3 = arg(s, "density");
  p.T2_bath_s = arg(s, "T2_bath");
  const auto thetas = s.numbers("theta_deg");
  const auto tau = grid(s, "tau");
  const double noise = arg_or(s, "noise", 0.0);
  const fit::Model& model = fit::find_model("exp_decay");
  Dataset d;
  d.x_header = "sin2_half_theta";
  d.y_header = "rate_per_s";
  d.provenance = prov;
  std::vector<double> sig;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    p.theta = thetas[i] * kDeg;
    const EchoTrace t = simulate_generalized_echo(p, tau, 1.0, noise, derive_seed(seed, i));
    const auto r = fit::fit_lm(fit::make_problem(model, t.tau_s, t.value, noise > 0.0 ? t.sigma : std::vector<double>{}));
    if (!r.converged) rep_.non_converged.push_back(out.name + " (theta " + fmt(thetas[i]) + " deg)");
    const double t2 = r.value("T2");
    const double half = std::sin(p.theta / 2);
    d.x.push_back(half * half);
    d.y.push_back(1.0 / t2);
    sig.push_back(r.stderr_of("T2") / (t2 * t2));
    put(out, "T2_theta" + fmt(thetas[i]), t2, "s", prov + "; model exp_decay");
  }
  bool usable = true;
  for (double v : sig) usable = usable && v > 0.0;
  if (usable && noise > 0.0) d.sigma = sig;
  out.data = std::move(d);
}

void Runner::step_recovery(const ConfigSection& s, StepOutput& out, const std::string& prov, std::uint64_t seed) {
  RecoverySpec spec;
  const auto w = s.numbers("weights");
  const auto t1 = s.si_list("T1");
  if (w.size() != t1.size()) throw ValidationError("[" + s.name + "] weights and T1 differ in length");
  for (std::size_t i = 0; i < w.size(); ++i) spec.components.push_back({w[i], t1[i]});
  spec.tau_s = grid(s, "tau");
  spec.sign = arg_or(s, "sign", 1.0);
  spec.offset = arg_or(s, "offset", 0.0);
  spec.noise_sigma = arg_or(s, "noise", 0.0);
  spec.seed = seed;
  const EchoTrace t = simulate_inversion_recovery(spec);
  out.data = Dataset{"tau_s", "signal", t.tau_s, t.value, spec.noise_sigma > 0.0 ? t.sigma : std::vector<double>{}, prov};
}

void Runner::step_pump_probe(const ConfigSection& s, StepOutput& out, const std::string& prov, std::uint64_t seed) {
  PumpProbeSpec spec;
  spec.system = RateSystem::thermal(arg(s, "T1_eff"), arg_or(s, "field", 0.1), arg_or(s, "g", spin_from_config(cfg_).g),
                                    arg_or(s, "temperature", 3.6), arg_or(s, "pump_rate", 1e4),
                                    arg_or(s, "radiative_lifetime", 3.4e-3), arg_or(s, "branching", 0.5));
  spec.pulse_s = arg_or(s, "pulse", 100e-6);
  spec.window_s = arg_or(s, "window", 4e-3);
  const double noise = arg_or(s, "noise", 0.0);
  const EchoTrace t = simulate_pump_probe(spec, grid(s, "tau"), noise, seed);
  put(out, "T1_eff", spec.system.T1_eff(), "s", prov);
  put(out, "w_up", spec.system.w_up, "1/s", prov);
  put(out, "w_down", spec.system.w_down, "1/s", prov);
  out.data = Dataset{"tau_s", "delta_pl", t.tau_s, t.value, noise > 0.0 ? t.sigma : std::vector<double>{}, prov};
}

void Runner::step_mc(const ConfigSection& s, StepOutput& out, const std::string& prov, std::uint64_t seed) {
  McDiffusionSpec spec;
  spec.density_m3 = arg(s, "density");
  spec.theta = arg_or(s, "theta_deg", 180.0) * kDeg;
  spec.g = arg_or(s, "g", spin_from_config(cfg_).g);
  spec.tau_s = grid(s, "tau");
  spec.n_spins = static_cast<int>(s.integer_or("n_spins", 1000));
  spec.n_realizations = static_cast<int>(s.integer_or("n_realizations", 200));
  spec.cutoff_m = arg_or(s, "cutoff", 0.5e-9);
  spec.threads = static_cast<unsigned>(s.integer_or("threads", 0));
  spec.seed = seed;
  if (spec.n_spins < 100) throw ValidationError("[" + s.name + "] n_spins must be at least 100");
  const McDiffusionResult r = monte_carlo_instantaneous_diffusion(spec);
  InstDiffusionParams p{spec.g, spec.density_m3, spec.theta, 0.0};
  const double formula = inst_diffusion_term(p);
  put(out, "rate", r.rate_per_s, "1/s", prov);
  put(out, "rate_stderr", r.rate_stderr, "1/s", prov);
  put(out, "formula_rate", formula, "1/s", prov + "; closed form");
  if (formula > 0.0) put(out, "rate_ratio", r.rate_per_s / formula, "1", prov);
  out.data = Dataset{"tau_s", "echo", r.trace.tau_s, r.trace.value, {}, prov};
}

void Runner::step_generate(const ConfigSection& s, StepOutput& out, const std::string& prov, std::uint64_t seed) {
  const fit::Model& model = fit::find_model(s.text("model"));
  std::vector<double> p(model.params.size());
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = arg(s, "param." + model.params[k]);
  const auto x = grid(s, "x");
  auto y = fit::evaluate(model, p, x);
  const double noise_abs = arg_or(s, "noise", 0.0);
  const double noise_rel = arg_or(s, "noise_rel", 0.0);
  if (noise_abs < 0.0 || noise_rel < 0.0) throw DomainError("noise must be >= 0");
  std::vector<double> sigma;
  if (noise_abs > 0.0 || noise_rel > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (double& v : y) {
      const double sg = noise_abs + noise_rel * std::abs(v);
      sigma.push_back(sg);
      v += sg * n01(rng);
    }
  }
  out.data = Dataset{s.text_or("x_header", "x"), s.text_or("y_header", "y"), x, y, sigma, prov + "; model " + model.name};
}

void Runner::step_dataset(const ConfigSection& s, StepOutput& out, const std::string& prov) {
  Dataset d;
  d.provenance = prov;
  if (s.has("file")) {
    std::filesystem::path f = s.text("file");
    if (f.is_relative()) f = opt_.base_dir / f;
    const bool decay = s.text_or("trace", "generic") == "decay";
    const TraceFile t = ingest_trace(f, decay ? TraceKind::Decay : TraceKind::Generic);
    d.x_header = t.columns[0].header;
    d.y_header = t.columns[1].header;
    d.x = t.si(0);
    d.y = t.si(1);
    if (t.has_sigma()) d.sigma = t.si(2);
    d.provenance += "; file " + f.filename().string();
  } else {
    d.x = s.si_list("x");
    d.y = s.si_list("y");
    if (s.has("sigma")) d.sigma = s.si_list("sigma");
    d.x_header = s.text_or("x_header", "x");
    d.y_header = s.text_or("y_header", "y");
  }
  if (d.x.size() != d.y.size() || (!d.sigma.empty() && d.sigma.size() != d.x.size()))
    throw ValidationError("[" + s.name + "] columns differ in length");
  const std::string tr = s.text_or("transform", "none");
  if (tr == "reciprocal") {
    for (std::size_t i = 0; i < d.y.size(); ++i) {
      if (d.y[i] == 0.0) throw DomainError("cannot take the reciprocal of zero");
      if (!d.sigma.empty()) d.sigma[i] /= d.y[i] * d.y[i];
      d.y[i] = 1.0 / d.y[i];
    }
    d.y_header = "inverse_" + d.y_header;
  } else if (tr != "none") {
    throw ValidationError("[" + s.name + "] unknown transform '" + tr + "'");
  }
  out.data = std::move(d);
}

void Runner::step_fit(const ConfigSection& s, StepOutput& out, const std::string& prov) {
  const auto& me = s.entry("model");
  const fit::Model* model = nullptr;
  try {
    model = &fit::find_model(me.value);
  } catch (const DomainError&) {
    throw ValidationError("line " + std::to_string(me.line) + ": unknown model '" + me.value + "'");
  }
  const Dataset& d = dataset(s, "data");
  fit::ProblemOverrides ov;
  for (const auto& p : model->params) {
    if (s.has("init." + p)) ov.init[p] = arg(s, "init." + p);
    if (s.has("bounds." + p)) {
      const auto b = s.si_list("bounds." + p);
      if (b.size() != 2) throw ValidationError("[" + s.name + "] bounds." + p + " needs two values");
      ov.bounds[p] = fit::Bound{b[0], b[1]};
    }
  }
  if (s.has("fix"))
    for (const auto& p : s.list("fix")) ov.fix.insert(p);
  if (s.has("release"))
    for (const auto& p : s.list("release")) ov.release.insert(p);
  fit::FitProblem pb = fit::make_problem(*model, d.x, d.y, s.flag_or("weighted", true) ? d.sigma : std::vector<double>{}, ov);
  if (s.has("max_iterations")) pb.options.max_iterations = static_cast<int>(s.integer("max_iterations"));
  const fit::FitResult r = fit::fit_lm(pb);
  const std::string fprov = prov + "; model " + model->name + "; data " + s.text("data").substr(1);
  for (std::size_t k = 0; k < r.params.size(); ++k) {
    const std::string& n = r.names[k];
    put(out, n, r.params[k], "", fprov);
    put(out, n + ".stderr", r.stderr_1sigma[k], "", fprov);
    put(out, n + ".ci95_lo", r.ci95_lo[k], "", fprov);
    put(out, n + ".ci95_hi", r.ci95_hi[k], "", fprov);
  }
  put(out, "chi2", r.chi2, "1", fprov);
  put(out, "iterations", r.iterations, "1", fprov);
  put(out, "converged", r.converged ? 1.0 : 0.0, "1", fprov);
  if (!r.converged) rep_.non_converged.push_back(out.name);
  out.fit = r;
  Dataset curve;
  curve.x_header = d.x_header;
  curve.y_header = "model";
  curve.x = d.x;
  curve.y = fit::evaluate(*model, r.params, d.x);
  curve.provenance = fprov;
  out.data = std::move(curve);
}

void Runner::step_fit_linear(const ConfigSection& s, StepOutput& out, const std::string& prov) {
  const Dataset& d = dataset(s, "data");
  const auto lf = fit::fit_linear_weighted(d.x, d.y, s.flag_or("weighted", true) ? d.sigma : std::vector<double>{});
  const std::string fprov = prov + "; data " + s.text("data").substr(1);
  put(out, "slope", lf.slope, "", fprov);
  put(out, "slope.stderr", std::sqrt(lf.var_slope), "", fprov);
  put(out, "intercept", lf.intercept, "", fprov);
  put(out, "intercept.stderr", std::sqrt(lf.var_intercept), "", fprov);
  put(out, "chi2", lf.chi2, "1", fprov);
}

void Runner::step_derive(const ConfigSection& s, StepOutput& out, const std::string& prov) {
  const std::string op = s.text("op");
  const std::string dprov = prov + "; op " + op;
  if (op == "reciprocal") {
    const double v = arg(s, "of");
    if (v == 0.0) throw DomainError("reciprocal of zero");
    put(out, "result", 1.0 / v, "", dprov);
  } else if (op == "scale") {
    put(out, "result", arg(s, "of") * arg(s, "factor"), "", dprov);
  } else if (op == "linewidth") {
    put(out, "result", linewidth_from_T2(arg(s, "T2")), "Hz", dprov);
  } else if (op == "id-density") {
    put(out, "result", arg(s, "slope") / inst_diffusion_constant(arg_or(s, "g", spin_from_config(cfg_).g)), "1/m^3",
        dprov);
  } else if (op == "probed-fraction") {
    const double bw = rectangular_pulse_bandwidth(arg(s, "pulse"), arg_or(s, "factor", 0.8));
    put(out, "bandwidth", bw, "Hz", dprov);
    put(out, "result", probed_fraction(arg(s, "line_fwhm"), bw), "1", dprov);
  } else if (op == "ppm") {
    const double nc = arg_or(s, "cation_density", sample_from_config(cfg_).cation_density_m3);
    put(out, "result", density_to_ppm(arg(s, "density"), nc, arg(s, "probed_fraction")), "ppm", dprov);
  } else if (op == "orbach-term") {
    HomLinewidthParams p;
    p.alpha_orbach_Hz = arg(s, "alpha_orbach");
    p.delta_E_J = mev_to_joule(arg(s, "dE_meV"));
    put(out, "result", orbach_term(p, arg(s, "temperature")), "Hz", dprov);
  } else if (op == "model-eval") {
    const auto& fe = s.entry("fit");
    if (fe.value.empty() || fe.value.front() != '@') throw ValidationError("'fit' must reference a fit step");
    const StepOutput& src = step_named(fe.value.substr(1), fe.line);
    if (!src.fit) throw ValidationError("step '" + src.name + "' is not a fit");
    const fit::Model& m = fit::find_model(src.fit->model_name);
    const double x = arg(s, "x");
    put(out, "result", m.f(x, src.fit->params), "", dprov + "; model " + m.name);
  } else {
    throw ValidationError("[" + s.name + "] unknown derive op '" + op + "'");
  }
}

void Runner::run_step(const ConfigSection& s, StepOutput& out, std::size_t idx) {
  const std::string kind = s.text("kind");
  out.kind = kind;
  const std::uint64_t seed = seed_for(s, idx);
  const std::string prov = kind + " step '" + out.name + "'; scenario " + rep_.name + "; seed " + std::to_string(seed);
  if (kind == "convert") step_convert(s, out, prov);
  else if (kind == "boltzmann") step_boltzmann(s, out, prov);
  else if (kind == "pl-spectrum") step_pl(s, out, prov);
  else if (kind == "separation") step_separation(s, out, prov);
  else if (kind == "epr-spectrum") step_epr(s, out, prov);
  else if (kind == "hyperfine-check") step_hyperfine(s, out, prov);
  else if (kind == "simulate-echo") step_echo(s, out, prov, seed);
  else if (kind == "id-series") step_id_series(s, out, prov, seed);
  else if (kind == "simulate-recovery") step_recovery(s, out, prov, seed);
  else if (kind == "simulate-pump-probe") step_pump_probe(s, out, prov, seed);
  else if (kind == "mc-id") step_mc(s, out, prov, seed);
  else if (kind == "generate-model") step_generate(s, out, prov, seed);
  else if (kind == "dataset") step_dataset(s, out, prov);
  else if (kind == "fit") step_fit(s, out, prov);
  else if (kind == "fit-linear") step_fit_linear(s, out, prov);
  else if (kind == "derive") step_derive(s, out, prov);
  else throw ValidationError("line " + std::to_string(s.line) + ": unknown step kind '" + kind + "'");
  for (const auto* e : s.unused())
    throw ValidationError("line " + std::to_string(e->line) + ": unknown key '" + e->key + "' in [" + s.name + "]");
}

void Runner::check(const ConfigSection& s) {
  CheckOutcome c;
  c.name = s.name.substr(6);
  const auto& ve = s.entry("value");
  c.reference = ve.value;
  c.value = resolve(ve.value, ve.line);
  if (s.has("range")) {
    const auto r = s.si_list("range");
    if (r.size() != 2) throw ValidationError("line " + std::to_string(s.line) + ": range needs two values");
    c.pass = c.value >= r[0] && c.value <= r[1];
    c.criterion = "in [" + brief(r[0]) + ", " + brief(r[1]) + "]";
  } else {
    const double expect = arg(s, "expect");
    if (s.has("rel_tol")) {
      const double tol = s.number("rel_tol");
      c.pass = std::abs(c.value - expect) <= tol * std::abs(expect);
      c.criterion = "within " + brief(tol) + " (relative) of " + brief(expect);
    } else {
      const double tol = arg(s, "abs_tol");
      c.pass = std::abs(c.value - expect) <= tol;
      c.criterion = "within " + brief(tol) + " of " + brief(expect);
    }
  }
  for (const auto* e : s.unused())
    throw ValidationError("line " + std::to_string(e->line) + ": unknown key '" + e->key + "' in [" + s.name + "]");
  rep_.checks.push_back(std::move(c));
}

Json Runner::to_json() const {
  Json j;
  j["scenario"] = rep_.name;
  j["seed"] = rep_.seed;
  j["generated_at"] = opt_.timestamp.empty() ? utc_now() : opt_.timestamp;
  Json steps = Json::array();
  for (const auto& s : rep_.steps) {
    Json js;
    js["name"] = s.name;
    js["kind"] = s.kind;
    Json vals = Json::object();
    for (const auto& [k, v] : s.values) vals[k] = Json{{"value", v.value}, {"unit", v.unit}, {"provenance", v.provenance}};
    js["values"] = vals;
    if (s.fit) {
      const auto& r = *s.fit;
      Json f;
      f["model"] = r.model_name;
      f["status"] = fit::status_name(r.status);
      f["converged"] = r.converged;
      f["iterations"] = r.iterations;
      f["chi2"] = r.chi2;
      f["reduced_chi2"] = std::isfinite(r.reduced_chi2) ? Json(r.reduced_chi2) : Json(nullptr);
      f["dof"] = r.dof;
      f["sigma_supplied"] = r.sigma_supplied;
      f["ridge_used"] = r.ridge_used;
      Json params = Json::array();
      for (std::size_t k = 0; k < r.params.size(); ++k)
        params.push_back(Json{{"name", r.names[k]},
                              {"value", r.params[k]},
                              {"stderr", r.stderr_1sigma[k]},
                              {"ci95", Json::array({r.ci95_lo[k], r.ci95_hi[k]})},
                              {"fixed", static_cast<bool>(r.fixed[k])}});
      f["parameters"] = params;
      Json cov = Json::array();
      for (Eigen::Index a = 0; a < r.covariance.rows(); ++a) {
        Json row = Json::array();
        for (Eigen::Index b = 0; b < r.covariance.cols(); ++b) row.push_back(r.covariance(a, b));
        cov.push_back(row);
      }
      f["covariance"] = cov;
      f["chi2_history"] = r.chi2_history;
      js["fit"] = f;
    }
    if (s.data) js["points"] = s.data->x.size();
    js["files"] = s.files;
    steps.push_back(js);
  }
  j["steps"] = steps;
  Json checks = Json::array();
  for (const auto& c : rep_.checks)
    checks.push_back(
        Json{{"name", c.name}, {"reference", c.reference}, {"value", c.value}, {"criterion", c.criterion}, {"pass", c.pass}});
  j["checks"] = checks;
  j["warnings"] = rep_.warnings;
  j["non_converged"] = rep_.non_converged;
  j["exit_code"] = rep_.exit_code;
  return j;
}

void Runner::write_outputs() {
  if (opt_.out_dir.empty()) return;
  const std::filesystem::path dir = opt_.out_dir / (rep_.name.empty() ? std::string("scenario") : rep_.name);
  std::filesystem::create_directories(dir);
  for (auto& s : rep_.steps) {
    if (!s.data) continue;
    TraceFile t;
    t.columns = {parse_column(s.data->x_header), parse_column(s.data->y_header)};
    t.data = {s.data->x, s.data->y};
    if (!s.data->sigma.empty()) {
      t.columns.push_back(parse_column("sigma"));
      t.data.push_back(s.data->sigma);
    }
    const std::string file = s.name + ".csv";
    write_trace(dir / file, t);
    s.files.push_back(file);
  }
}

ScenarioReport Runner::run() {
  const ConfigSection* head = cfg_.find("scenario");
  const ConfigSection& top = cfg_.sections.front();
  if (!top.entries.empty())
    throw ValidationError("line " + std::to_string(top.entries.front().line) + ": key outside any section");
  rep_.name = head ? head->text_or("name", "") : "";
  rep_.seed = opt_.seed ? *opt_.seed : head ? static_cast<std::uint64_t>(head->integer_or("seed", 0)) : 0;
  if (head) {
    (void)head->text_or("description", "");
    for (const auto* e : head->unused())
      throw ValidationError("line " + std::to_string(e->line) + ": unknown key '" + e->key + "' in [scenario]");
  }
  // Validate the shared sections up front so errors surface before any work.
  (void)levels_from_config(cfg_);
  (void)sample_from_config(cfg_);
  (void)spin_from_config(cfg_);

  std::size_t step_idx = 0;
  for (const auto& s : cfg_.sections) {
    if (s.name.empty() || s.name == "scenario" || s.name == "levels" || s.name == "sample" || s.name == "spin") continue;
    if (s.name.rfind("step.", 0) == 0) {
      StepOutput out;
      out.name = s.name.substr(5);
      if (out.name.empty() || out.name.find('.') != std::string::npos)
        throw ValidationError("line " + std::to_string(s.line) + ": step names must be non-empty and contain no '.'");
      run_step(s, out, step_idx++);
      index_[out.name] = rep_.steps.size();
      rep_.steps.push_back(std::move(out));
    } else if (s.name.rfind("check.", 0) == 0) {
      check(s);
    } else {
      throw ValidationError("line " + std::to_string(s.line) + ": unknown section [" + s.name + "]");
    }
  }
  rep_.exit_code = rep_.non_converged.empty() ? 0 : 2;
  write_outputs();
  rep_.json = to_json().dump(2) + "\n";
  if (!opt_.out_dir.empty()) {
    const std::filesystem::path dir = opt_.out_dir / (rep_.name.empty() ? std::string("scenario") : rep_.name);
    std::ofstream f(dir / "report.json", std::ios::binary);
    if (!f) throw ValidationError("cannot write report to " + dir.string());
    f << rep_.json;
  }
  return rep_;
}

double energy_joule(const std::string& text, int line) {
  const std::string t = trim(text);
  const auto space = t.find_first_of(" \t");
  if (space == std::string::npos) throw ParseError(line, "level energy needs a unit (meV, nm, THz, ...)");
  const double v = parse_number(t.substr(0, space), line);
  const auto u = try_parse_unit(trim(std::string_view(t).substr(space)));
  if (!u) throw ParseError(line, "unknown unit in '" + t + "'");
  if (v == 0.0) return 0.0;
  return to_si(convert(Quantity(v, *u), Unit::J));
}

}  // namespace

const Value* StepOutput::find(const std::string& key) const {
  for (const auto& [k, v] : values)
    if (k == key) return &v;
  return nullptr;
}

LevelScheme levels_from_config(const Config& cfg) {
  LevelScheme anchors = LevelScheme::measured_levels();
  const ConfigSection* s = cfg.find("levels");
  if (!s) return anchors;
  std::vector<Level> levels = anchors.levels();
  for (const auto& e : s->entries) {
    if (e.key.rfind("degeneracy.", 0) == 0) continue;
    if (e.key.size() < 2 || (e.key[0] != 'Z' && e.key[0] != 'Y'))
      throw ParseError(e.line, "level labels start with Z or Y, got '" + e.key + "'");
    const double energy = energy_joule(s->text(e.key), e.line);
    auto it = std::find_if(levels.begin(), levels.end(), [&](const Level& l) { return l.label == e.key; });
    if (it != levels.end()) {
      it->energy_J = energy;
    } else {
      levels.push_back(Level{e.key, e.key[0] == 'Z' ? Multiplet::Z : Multiplet::Y, energy, 2});
    }
  }
  for (const auto& e : s->entries) {
    if (e.key.rfind("degeneracy.", 0) != 0) continue;
    const std::string label = e.key.substr(11);
    auto it = std::find_if(levels.begin(), levels.end(), [&](const Level& l) { return l.label == label; });
    if (it == levels.end()) throw ParseError(e.line, "degeneracy for unknown level '" + label + "'");
    it->degeneracy = static_cast<int>(s->integer(e.key));
  }
  // Declaration order within each multiplet follows energy.
  std::stable_sort(levels.begin(), levels.end(), [](const Level& a, const Level& b) {
    if (a.multiplet != b.multiplet) return a.multiplet == Multiplet::Z;
    return a.label < b.label;
  });
  LevelScheme scheme(levels);
  scheme.validate();
  return scheme;
}

MaterialSample sample_from_config(const Config& cfg) {
  MaterialSample m = MaterialSample::ceria_default();
  if (const ConfigSection* s = cfg.find("sample")) {
    if (s->has("lattice")) m.cation_density_m3 = fluorite_cation_density(s->si("lattice"));
    if (s->has("cation_density")) m.cation_density_m3 = s->si("cation_density");
    if (s->has("ppm")) m.dopant_ppm = s->number("ppm");
    (void)s->text_or("thickness", "");
    for (const auto* e : s->unused())
      throw ValidationError("line " + std::to_string(e->line) + ": unknown key '" + e->key + "' in [sample]");
  }
  m.validate();
  return m;
}

SpinSystem spin_from_config(const Config& cfg) {
  SpinSystem sys;
  if (const ConfigSection* s = cfg.find("spin")) {
    if (s->has("g")) sys.g = s->number("g");
    if (s->has("hyperfine")) sys.hyperfine_Hz = s->si("hyperfine");
    if (s->has("nuclear_spin")) sys.nuclear_spin = s->number("nuclear_spin");
    if (s->has("odd_abundance")) sys.odd_abundance = s->number("odd_abundance");
    if (s->has("line_fwhm")) sys.line_fwhm_T = s->si("line_fwhm");
    for (const auto* e : s->unused())
      throw ValidationError("line " + std::to_string(e->line) + ": unknown key '" + e->key + "' in [spin]");
  }
  sys.validate();
  return sys;
}

ScenarioReport run_scenario(const Config& cfg, const RunOptions& options) {
  Runner r(cfg, options);
  return r.run();
}

int run_scenario_file(const std::filesystem::path& path, RunOptions options, std::ostream& log) {
  try {
    const Config cfg = Config::load(path);
    if (options.base_dir == ".") options.base_dir = path.parent_path().empty() ? "." : path.parent_path();
    const ScenarioReport rep = run_scenario(cfg, options);
    int passed = 0;
    for (const auto& c : rep.checks) passed += c.pass ? 1 : 0;
    log << "scenario " << (rep.name.empty() ? path.filename().string() : rep.name) << ": " << rep.steps.size()
        << " steps, " << passed << "/" << rep.checks.size() << " checks passed\n";
    for (const auto& c : rep.checks)
      if (!c.pass) log << "  check " << c.name << " failed: " << brief(c.value) << " not " << c.criterion << "\n";
    for (const auto& n : rep.non_converged) log << "  fit did not converge: " << n << "\n";
    return rep.exit_code;
  } catch (const std::exception& e) {
    log << "error: " << path.string() << ": " << e.what() << "\n";
    return 1;
  }
}

std::filesystem::path bundled_scenario_dir() {
  return KRAMERS_SCENARIO_DIR;
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("KRAMERS_OUTPUT_DIR"); env && *env) return env;
  return "kramers-out";
}

}  // namespace kramers::io
