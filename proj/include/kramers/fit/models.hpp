#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kramers/fit/lm.hpp"

namespace kramers::fit {

using InitFn = std::function<std::vector<double>(std::span<const double> x, std::span<const double> y,
                                                 std::span<const double> sigma)>;

/// A named model: y = f(x; p). All quantities SI unless the parameter name
/// carries a unit suffix (e.g. dE_meV).
struct Model {
  std::string name;
  std::string formula;
  std::string x_quantity;  // what x means, e.g. "delay (s)"
  std::vector<std::string> params;
  std::vector<Bound> bounds;
  std::vector<bool> fixed;  // parameters held at their initial value by default
  ModelFn f;
  GradFn grad;
  InitFn init;  // data-driven starting point, fixed entries at defaults

  std::size_t index(std::string_view param) const;
};

const std::vector<std::string>& model_names();
/// Throws DomainError naming the model when it is unknown.
const Model& find_model(std::string_view name);

struct ProblemOverrides {
  std::map<std::string, double> init;
  std::map<std::string, Bound> bounds;
  std::set<std::string> fix;
  std::set<std::string> release;  // free a parameter fixed by default
};

/// FitProblem for a registered model, started from its data-driven
/// initial guess with overrides applied.
FitProblem make_problem(const Model& model, std::vector<double> x, std::vector<double> y,
                        std::vector<double> sigma, const ProblemOverrides& overrides = {});

/// Model curve at the given abscissae.
std::vector<double> evaluate(const Model& model, std::span<const double> params, std::span<const double> x);

}  // namespace kramers::fit
