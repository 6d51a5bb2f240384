// kramers: command-line front end for the spectroscopy toolkit.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kramers/crystal_field.hpp"
#include "kramers/errors.hpp"
#include "kramers/fit/lm.hpp"
#include "kramers/fit/models.hpp"
#include "kramers/io/config.hpp"
#include "kramers/io/scenario.hpp"
#include "kramers/io/trace_file.hpp"
#include "kramers/physics/units.hpp"
#include "kramers/pulse_sim.hpp"
#include "kramers/spin_hamiltonian.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using namespace kramers;

namespace {

constexpr int kUsage = 64;

struct Globals {
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "csv";
};

std::string sig5(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.5g", v);
  return buf;
}

double si(const std::string& text) { return io::parse_si_value(text, 0); }

std::vector<double> si_list(const std::string& text) {
  io::Config cfg = io::Config::parse("[a]\nv = " + text + "\n");
  return cfg.find("a")->si_list("v");
}

// Writes a trace to --out/<name>.csv, or to stdout.
void emit_trace(const Globals& g, const std::string& name, const io::TraceFile& t) {
  std::string text;
  if (g.format == "json") {
    Json j;
    for (std::size_t c = 0; c < t.columns.size(); ++c) j[t.columns[c].header] = t.data[c];
    text = j.dump(2) + "\n";
  } else {
    text = io::format_trace(t);
  }
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  fs::create_directories(g.out);
  const fs::path p = fs::path(g.out) / (name + (g.format == "json" ? ".json" : ".csv"));
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + p.string());
  f << text;
  std::cerr << "wrote " << p.string() << "\n";
}

io::TraceFile make_trace(std::vector<std::string> headers, std::vector<std::vector<double>> cols) {
  io::TraceFile t;
  for (const auto& h : headers) t.columns.push_back(io::parse_column(h));
  t.data = std::move(cols);
  return t;
}

struct Grid {
  std::string start = "0", stop, points = "101";
  std::vector<double> values() const {
    return uniform_grid(si(start), si(stop), static_cast<int>(si(points)));
  }
};

void add_grid(CLI::App* app, Grid& g, const std::string& default_stop) {
  g.stop = default_stop;
  app->add_option("--tau-start", g.start, "first delay (e.g. '0 ns')")->capture_default_str();
  app->add_option("--tau-stop", g.stop, "last delay")->capture_default_str();
  app->add_option("--points", g.points, "number of delays")->capture_default_str();
}

std::map<std::string, std::string> key_values(const std::vector<std::string>& items) {
  std::map<std::string, std::string> out;
  for (const auto& it : items) {
    for (const auto& kv : io::split_list(it)) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ValidationError("expected name=value, got '" + kv + "'");
      out[io::trim(kv.substr(0, eq))] = io::trim(kv.substr(eq + 1));
    }
  }
  return out;
}

int print_fit(const Globals& g, const fit::FitResult& r) {
  if (g.format == "json") {
    Json j;
    j["model"] = r.model_name;
    j["converged"] = r.converged;
    j["status"] = fit::status_name(r.status);
    j["iterations"] = r.iterations;
    j["chi2"] = r.chi2;
    Json ps = Json::array();
    for (std::size_t k = 0; k < r.params.size(); ++k)
      ps.push_back(Json{{"name", r.names[k]},
                        {"value", r.params[k]},
                        {"stderr", r.stderr_1sigma[k]},
                        {"ci95", Json::array({r.ci95_lo[k], r.ci95_hi[k]})},
                        {"fixed", static_cast<bool>(r.fixed[k])}});
    j["parameters"] = ps;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "parameter,value,stderr,ci95_lo,ci95_hi\n";
    for (std::size_t k = 0; k < r.params.size(); ++k)
      std::cout << r.names[k] << ',' << io::format_number(r.params[k]) << ','
                << io::format_number(r.stderr_1sigma[k]) << ',' << io::format_number(r.ci95_lo[k]) << ','
                << io::format_number(r.ci95_hi[k]) << "\n";
    std::cerr << "chi2 " << io::format_number(r.chi2) << ", " << r.iterations << " iterations, "
              << fit::status_name(r.status) << (r.converged ? "" : " (NOT converged)") << "\n";
  }
  return r.converged ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Er:CeO2 spin-photon spectroscopy simulation and fitting"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--out", g.out, "output directory");
  app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  // convert
  auto* conv = app.add_subcommand("convert", "convert a quantity between units");
  std::string cv_value, cv_from, cv_to;
  double cv_g = 0.0;
  conv->add_option("value", cv_value)->required();
  conv->add_option("from", cv_from)->required();
  conv->add_option("to", cv_to)->required();
  conv->add_option("--g", cv_g, "g factor for field conversions");

  // levels
  auto* lev = app.add_subcommand("levels", "print the crystal-field level table of a scenario");
  std::string lev_file;
  lev->add_option("scenario", lev_file)->required();

  // pl-spectrum
  auto* pl = app.add_subcommand("pl-spectrum", "synthesize the photoluminescence spectrum");
  std::string pl_t = "3.6 K", pl_res = "9 GHz", pl_scn;
  pl->add_option("--temperature", pl_t)->capture_default_str();
  pl->add_option("--resolution", pl_res)->capture_default_str();
  pl->add_option("--scenario", pl_scn, "take the level scheme from this scenario");

  // epr-spectrum
  auto* epr = app.add_subcommand("epr-spectrum", "synthesize the field-swept echo EPR spectrum");
  std::string epr_f = "9.7 GHz", epr_a = "75 MHz", epr_lo, epr_hi;
  double epr_g = 6.828;
  int epr_points = 2001;
  epr->add_option("--frequency", epr_f)->capture_default_str();
  epr->add_option("--hyperfine", epr_a)->capture_default_str();
  epr->add_option("--g", epr_g)->capture_default_str();
  epr->add_option("--field-lo", epr_lo);
  epr->add_option("--field-hi", epr_hi);
  epr->add_option("--points", epr_points)->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate synthetic traces");
  sim->require_subcommand(1);
  auto* s_echo = sim->add_subcommand("echo", "two-pulse echo decay with beat");
  std::string e_t2 = "720 ns", e_f = "3.33 MHz", e_depth = "0.3", e_phase = "0", e_noise = "0", e_conv = "amplitude";
  Grid e_grid;
  s_echo->add_option("--T2", e_t2)->capture_default_str();
  s_echo->add_option("--f-osc", e_f)->capture_default_str();
  s_echo->add_option("--depth", e_depth)->capture_default_str();
  s_echo->add_option("--phase", e_phase)->capture_default_str();
  s_echo->add_option("--noise", e_noise)->capture_default_str();
  s_echo->add_option("--convention", e_conv)->check(CLI::IsMember({"amplitude", "intensity"}))->capture_default_str();
  add_grid(s_echo, e_grid, "2 us");

  auto* s_rec = sim->add_subcommand("recovery", "inversion recovery");
  std::string r_w = "0.5, 0.5", r_t1 = "0.11, 0.83 ms", r_noise = "0";
  Grid r_grid;
  s_rec->add_option("--weights", r_w)->capture_default_str();
  s_rec->add_option("--T1", r_t1)->capture_default_str();
  s_rec->add_option("--noise", r_noise)->capture_default_str();
  add_grid(s_rec, r_grid, "4 ms");

  auto* s_pp = sim->add_subcommand("pump-probe", "optical pump-probe Delta PL");
  std::string p_t1 = "1.106 ms", p_b = "0.1 T", p_temp = "3.6 K", p_pulse = "100 us", p_win = "4 ms", p_rate = "1e4",
              p_noise = "0";
  Grid p_grid;
  s_pp->add_option("--T1-eff", p_t1)->capture_default_str();
  s_pp->add_option("--field", p_b)->capture_default_str();
  s_pp->add_option("--temperature", p_temp)->capture_default_str();
  s_pp->add_option("--pulse", p_pulse)->capture_default_str();
  s_pp->add_option("--window", p_win)->capture_default_str();
  s_pp->add_option("--pump-rate", p_rate)->capture_default_str();
  s_pp->add_option("--noise", p_noise)->capture_default_str();
  add_grid(s_pp, p_grid, "8 ms");

  auto* s_mc = sim->add_subcommand("mc-id", "Monte-Carlo instantaneous diffusion");
  std::string m_n = "1.66e22", m_theta = "180";
  int m_spins = 1000, m_real = 200;
  unsigned m_threads = 0;
  Grid m_grid;
  s_mc->add_option("--density", m_n, "spins per m^3")->capture_default_str();
  s_mc->add_option("--theta-deg", m_theta)->capture_default_str();
  s_mc->add_option("--spins", m_spins)->capture_default_str();
  s_mc->add_option("--realizations", m_real)->capture_default_str();
  s_mc->add_option("--threads", m_threads)->capture_default_str();
  m_grid.points = "31";
  add_grid(s_mc, m_grid, "3 us");

  // fit
  auto* fitc = app.add_subcommand("fit", "fit a registered model to a CSV trace");
  std::string f_model, f_file;
  std::vector<std::string> f_init, f_bounds, f_fixed, f_release;
  bool f_unweighted = false;
  fitc->add_option("model", f_model)->required();
  fitc->add_option("trace", f_file)->required();
  fitc->add_option("--init", f_init, "name=value[,name=value]");
  fitc->add_option("--bounds", f_bounds, "name=lo:hi[,name=lo:hi]");
  fitc->add_option("--fixed", f_fixed, "parameters held at their initial value");
  fitc->add_option("--release", f_release, "free parameters that are fixed by default");
  fitc->add_flag("--unweighted", f_unweighted, "ignore a sigma column");

  // models
  auto* models = app.add_subcommand("models", "list the registered fit models");

  // reproduce / run
  auto* rep = app.add_subcommand("reproduce", "run the bundled scenarios");
  std::vector<std::string> rep_names;
  std::string rep_timestamp;
  rep->add_option("names", rep_names, "scenario names (default: all)");
  rep->add_option("--timestamp", rep_timestamp, "fixed report timestamp");
  auto* run = app.add_subcommand("run", "run a scenario file");
  std::string run_file;
  run->add_option("scenario", run_file)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*conv) {
      const Unit from = parse_unit(cv_from), to = parse_unit(cv_to);
      std::optional<double> gv;
      if (cv_g > 0.0) gv = cv_g;
      const Quantity q = convert(Quantity(io::parse_number(cv_value, 0), from), to, gv);
      if (g.format == "json")
        std::cout << Json{{"value", q.value}, {"unit", std::string(symbol(to))}}.dump() << "\n";
      else
        std::cout << sig5(q.value) << "\n";
      return 0;
    }
    if (*lev) {
      const LevelScheme s = io::levels_from_config(io::Config::load(lev_file));
      std::cout << "label,multiplet,energy_meV,degeneracy\n";
      for (const auto& l : s.levels())
        std::cout << l.label << ',' << (l.multiplet == Multiplet::Z ? "Z" : "Y") << ',' << sig5(joule_to_mev(l.energy_J))
                  << ',' << l.degeneracy << "\n";
      return 0;
    }
    if (*pl) {
      const LevelScheme s = pl_scn.empty() ? LevelScheme::measured_levels() : io::levels_from_config(io::Config::load(pl_scn));
      const PlSpectrum spec = synthesize_pl_spectrum(s, si(pl_t), si(pl_res));
      emit_trace(g, "pl-spectrum", make_trace({"wavelength_nm", "intensity"}, {spec.wavelength_nm, spec.intensity}));
      return 0;
    }
    if (*epr) {
      SpinSystem sys;
      sys.g = epr_g;
      sys.hyperfine_Hz = si(epr_a);
      const double f = si(epr_f);
      const double b0 = resonance_field_T(f, sys.g);
      FieldRange range{epr_lo.empty() ? 0.8 * b0 : si(epr_lo), epr_hi.empty() ? 1.2 * b0 : si(epr_hi), epr_points};
      const EprSpectrum spec = synthesize_epr_spectrum(sys, f, range);
      for (const auto& w : spec.warnings) std::cerr << "warning: " << w << "\n";
      emit_trace(g, "epr-spectrum", make_trace({"field_mT", "intensity"}, {spec.field_mT, spec.intensity}));
      return 0;
    }
    if (*s_echo) {
      EchoDecaySpec spec;
      spec.T2_s = si(e_t2);
      spec.beat = {si(e_f), si(e_depth), si(e_phase)};
      spec.tau_s = e_grid.values();
      spec.convention = e_conv == "amplitude" ? EchoConvention::Amplitude : EchoConvention::Intensity;
      spec.noise_sigma = si(e_noise);
      spec.seed = g.seed;
      const EchoTrace t = simulate_echo_decay(spec);
      emit_trace(g, "echo", make_trace({"tau_s", e_conv, "sigma"}, {t.tau_s, t.value, t.sigma}));
      return 0;
    }
    if (*s_rec) {
      RecoverySpec spec;
      const auto w = si_list(r_w), t1 = si_list(r_t1);
      if (w.size() != t1.size()) throw ValidationError("--weights and --T1 differ in length");
      for (std::size_t i = 0; i < w.size(); ++i) spec.components.push_back({w[i], t1[i]});
      spec.tau_s = r_grid.values();
      spec.noise_sigma = si(r_noise);
      spec.seed = g.seed;
      const EchoTrace t = simulate_inversion_recovery(spec);
      emit_trace(g, "recovery", make_trace({"tau_s", "signal", "sigma"}, {t.tau_s, t.value, t.sigma}));
      return 0;
    }
    if (*s_pp) {
      PumpProbeSpec spec;
      spec.system = RateSystem::thermal(si(p_t1), si(p_b), 6.828, si(p_temp), si(p_rate));
      spec.pulse_s = si(p_pulse);
      spec.window_s = si(p_win);
      const EchoTrace t = simulate_pump_probe(spec, p_grid.values(), si(p_noise), g.seed);
      emit_trace(g, "pump-probe", make_trace({"tau_s", "delta_pl", "sigma"}, {t.tau_s, t.value, t.sigma}));
      return 0;
    }
    if (*s_mc) {
      McDiffusionSpec spec;
      spec.density_m3 = si(m_n);
      spec.theta = si(m_theta) * 3.141592653589793 / 180.0;
      spec.tau_s = m_grid.values();
      spec.n_spins = m_spins;
      spec.n_realizations = m_real;
      spec.threads = m_threads;
      spec.seed = g.seed;
      if (spec.n_spins < 100) throw ValidationError("--spins must be at least 100");
      const McDiffusionResult r = monte_carlo_instantaneous_diffusion(spec);
      std::cerr << "decay rate " << sig5(r.rate_per_s) << " +- " << sig5(r.rate_stderr) << " 1/s (closed form "
                << sig5(inst_diffusion_term({spec.g, spec.density_m3, spec.theta, 0.0})) << ")\n";
      emit_trace(g, "mc-id", make_trace({"tau_s", "echo", "sigma"}, {r.trace.tau_s, r.trace.value, r.trace.sigma}));
      return 0;
    }
    if (*fitc) {
      const fit::Model& model = fit::find_model(f_model);
      const bool decay = model.x_quantity.rfind("delay", 0) == 0;
      const io::TraceFile t = io::ingest_trace(f_file, decay ? io::TraceKind::Decay : io::TraceKind::Generic);
      fit::ProblemOverrides ov;
      for (const auto& [k, v] : key_values(f_init)) ov.init[k] = si(v);
      for (const auto& [k, v] : key_values(f_bounds)) {
        const auto colon = v.find(':');
        if (colon == std::string::npos) throw ValidationError("bounds need lo:hi, got '" + v + "'");
        ov.bounds[k] = fit::Bound{si(v.substr(0, colon)), si(v.substr(colon + 1))};
      }
      for (const auto& item : f_fixed)
        for (const auto& p : io::split_list(item)) ov.fix.insert(p);
      for (const auto& item : f_release)
        for (const auto& p : io::split_list(item)) ov.release.insert(p);
      std::vector<double> sigma;
      if (t.has_sigma() && !f_unweighted) sigma = t.si(2);
      const fit::FitResult r = fit::fit_lm(fit::make_problem(model, t.si(0), t.si(1), sigma, ov));
      return print_fit(g, r);
    }
    if (*models) {
      for (const auto& name : fit::model_names()) {
        const auto& m = fit::find_model(name);
        std::cout << name << ": " << m.formula << "  [x: " << m.x_quantity << "]\n";
      }
      return 0;
    }
    if (*rep) {
      const fs::path dir = io::bundled_scenario_dir();
      std::vector<fs::path> files;
      if (rep_names.empty()) {
        for (const auto& e : fs::directory_iterator(dir))
          if (e.path().extension() == ".cfg") files.push_back(e.path());
        std::sort(files.begin(), files.end());
      } else {
        for (const auto& n : rep_names) {
          fs::path p = dir / (n + ".cfg");
          if (!fs::exists(p)) throw ValidationError("no bundled scenario named '" + n + "'");
          files.push_back(p);
        }
      }
      int code = 0;
      for (const auto& f : files) {
        io::RunOptions opt;
        opt.out_dir = g.out.empty() ? io::default_output_dir() : fs::path(g.out);
        if (app.count("--seed")) opt.seed = g.seed;
        opt.timestamp = rep_timestamp;
        const int c = io::run_scenario_file(f, opt, std::cout);
        // An input error outranks a non-converged fit.
        if (c == 1 || code == 1) code = 1;
        else code = std::max(code, c);
      }
      return code;
    }
    if (*run) {
      io::RunOptions opt;
      opt.out_dir = g.out.empty() ? io::default_output_dir() : fs::path(g.out);
      if (app.count("--seed")) opt.seed = g.seed;
      return io::run_scenario_file(run_file, opt, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
