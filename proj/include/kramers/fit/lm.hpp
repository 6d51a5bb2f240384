#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace kramers::fit {

using ModelFn = std::function<double(double x, std::span<const double> p)>;
/// Writes d model / d p_k into `grad` (one entry per parameter).
using GradFn = std::function<void(double x, std::span<const double> p, std::span<double> grad)>;

struct Bound {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

struct FitOptions {
  int max_iterations = 200;     // accepted steps
  int max_rejections = 40;      // consecutive rejected steps before giving up
  double chi2_rtol = 1e-10;
  double gradient_tol = 1e-8;
  double step_tol = 1e-12;
  double lambda0 = 1e-5;
  double nu = 3.0;
  double fd_step = 1e-6;        // relative central-difference step
};

struct FitProblem {
  std::string model_name;
  ModelFn model;
  GradFn gradient;  // optional; finite differences otherwise
  std::vector<std::string> names;
  std::vector<double> x, y, sigma;  // sigma empty: unweighted
  std::vector<double> initial;
  std::vector<Bound> bounds;  // empty or one per parameter
  std::vector<bool> fixed;    // empty or one per parameter
  FitOptions options;

  std::size_t n_params() const { return initial.size(); }
  std::size_t n_free() const;
  /// Shapes agree, data finite, n_data > n_free, lo <= init <= hi.
  void validate() const;
};

enum class FitStatus { Chi2Converged, GradientConverged, StepConverged, ExactFit, MaxIterations, Stalled };
const char* status_name(FitStatus s);

struct FitResult {
  std::string model_name;
  std::vector<std::string> names;
  std::vector<double> params;
  std::vector<double> stderr_1sigma;  // 0 for fixed parameters
  std::vector<double> ci95_lo, ci95_hi;
  std::vector<bool> fixed;
  Eigen::MatrixXd covariance;  // full size, zero rows/cols for fixed parameters
  double chi2 = 0.0;
  double reduced_chi2 = 0.0;
  double residual_norm = 0.0;
  int dof = 0;
  int iterations = 0;   // accepted steps
  int evaluations = 0;  // model sweeps over the data
  bool converged = false;
  bool sigma_supplied = false;
  bool ridge_used = false;  // singular normal equations were regularized
  FitStatus status = FitStatus::Stalled;
  std::vector<double> chi2_history;  // initial value, then one per accepted step

  double value(const std::string& name) const;
  double stderr_of(const std::string& name) const;
};

/// Levenberg-Marquardt with Marquardt diagonal scaling and bound transforms.
FitResult fit_lm(const FitProblem& problem);

/// Jacobian d model(x_i) / d p_k at `p` (rows data, cols all parameters),
/// analytic if the problem has a gradient and `analytic` is set, otherwise
/// central differences with the problem's relative step.
Eigen::MatrixXd model_jacobian(const FitProblem& problem, std::span<const double> p, bool analytic);

}  // namespace kramers::fit
