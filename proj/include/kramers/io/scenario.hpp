#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kramers/crystal_field.hpp"
#include "kramers/fit/lm.hpp"
#include "kramers/io/config.hpp"
#include "kramers/spin_hamiltonian.hpp"

namespace kramers::io {

struct Value {
  double value = 0.0;
  std::string unit;
  std::string provenance;
};

/// x, y, sigma in SI units; headers name them for CSV export.
struct Dataset {
  std::string x_header = "x";
  std::string y_header = "y";
  std::vector<double> x, y, sigma;
  std::string provenance;
};

struct StepOutput {
  std::string name;
  std::string kind;
  std::vector<std::pair<std::string, Value>> values;
  std::optional<Dataset> data;
  std::optional<fit::FitResult> fit;
  std::vector<std::string> files;

  const Value* find(const std::string& key) const;
};

struct CheckOutcome {
  std::string name;
  std::string reference;
  double value = 0.0;
  std::string criterion;
  bool pass = false;
};

struct ScenarioReport {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<StepOutput> steps;
  std::vector<CheckOutcome> checks;
  std::vector<std::string> non_converged;
  std::vector<std::string> warnings;
  int exit_code = 0;
  std::string json;  // the serialized report
};

struct RunOptions {
  std::filesystem::path out_dir;       // empty: no files are written
  std::filesystem::path base_dir = ".";  // resolves relative data files
  std::optional<std::uint64_t> seed;     // overrides the scenario seed
  std::string timestamp;                 // empty: current UTC time
};

/// Level scheme from a [levels] section (`Z2 = 1.51 meV`, `Y1 = 1530.74 nm`,
/// `degeneracy.Z3 = 4`) layered over the measured levels.
LevelScheme levels_from_config(const Config& cfg);
MaterialSample sample_from_config(const Config& cfg);
SpinSystem spin_from_config(const Config& cfg);

/// Runs the steps in declared order and evaluates the checks. Throws
/// ParseError / ValidationError / DomainError on bad input.
ScenarioReport run_scenario(const Config& cfg, const RunOptions& options);

/// Loads, runs and reports; returns 0, 1 (input error) or 2 (a fit did
/// not converge). Messages go to `log`.
int run_scenario_file(const std::filesystem::path& path, RunOptions options, std::ostream& log);

std::filesystem::path bundled_scenario_dir();
/// KRAMERS_OUTPUT_DIR if set, otherwise ./kramers-out.
std::filesystem::path default_output_dir();

}  // namespace kramers::io
