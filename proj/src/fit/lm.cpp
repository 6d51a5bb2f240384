#include "kramers/fit/lm.hpp"

#include <algorithm>
#include <cmath>

#include "kramers/errors.hpp"
#include "kramers/simd/kernels.hpp"

namespace kramers::fit {
namespace {

constexpr double kZ95 = 1.96;

enum class Kind { Free, Lower, Upper, Both };

// Maps an unconstrained internal coordinate u onto a bounded parameter p.
struct Transform {
  Kind kind = Kind::Free;
  double lo = 0.0, hi = 0.0;

  explicit Transform(const Bound& b) : lo(b.lo), hi(b.hi) {
    const bool l = std::isfinite(b.lo), h = std::isfinite(b.hi);
    kind = l && h ? Kind::Both : l ? Kind::Lower : h ? Kind::Upper : Kind::Free;
  }

  double to_ext(double u) const {
    switch (kind) {
      case Kind::Free: return u;
      case Kind::Lower: return lo + std::exp(u);
      case Kind::Upper: return hi - std::exp(u);
      case Kind::Both: return lo + (hi - lo) / (1.0 + std::exp(-u));
    }
    return u;
  }

  // Bound values themselves are nudged inward so the inverse exists.
  double to_int(double p) const {
    const double nudge = 1e-6 * std::max({std::abs(lo), std::abs(hi), 1.0});
    switch (kind) {
      case Kind::Free: return p;
      case Kind::Lower: return std::log(std::max(p - lo, p == lo ? nudge : 0.0));
      case Kind::Upper: return std::log(std::max(hi - p, p == hi ? nudge : 0.0));
      case Kind::Both: {
        const double w = hi - lo;
        const double t = std::clamp((p - lo) / w, 1e-9, 1.0 - 1e-9);
        return std::log(t / (1.0 - t));
      }
    }
    return p;
  }

  double dp_du(double p) const {
    switch (kind) {
      case Kind::Free: return 1.0;
      case Kind::Lower: return p - lo;
      case Kind::Upper: return -(hi - p);
      case Kind::Both: return (p - lo) * (hi - p) / (hi - lo);
    }
    return 1.0;
  }
};

struct Workspace {
  const FitProblem& pb;
  std::vector<std::size_t> free_idx;
  std::vector<Transform> tf;
  std::vector<double> inv_sigma;
  int evaluations = 0;

  explicit Workspace(const FitProblem& p) : pb(p) {
    for (std::size_t k = 0; k < p.n_params(); ++k) {
      if (p.fixed.empty() || !p.fixed[k]) free_idx.push_back(k);
      tf.emplace_back(p.bounds.empty() ? Bound{} : p.bounds[k]);
    }
    inv_sigma.assign(p.x.size(), 1.0);
    for (std::size_t i = 0; i < p.sigma.size(); ++i) inv_sigma[i] = 1.0 / p.sigma[i];
  }

  std::vector<double> to_ext(const Eigen::VectorXd& u, std::vector<double> base) const {
    for (std::size_t j = 0; j < free_idx.size(); ++j)
      base[free_idx[j]] = tf[free_idx[j]].to_ext(u(static_cast<Eigen::Index>(j)));
    return base;
  }

  // Weighted residuals; returns false if the model is not finite there.
  bool residuals(const std::vector<double>& p, Eigen::VectorXd& r) {
    ++evaluations;
    r.resize(static_cast<Eigen::Index>(pb.x.size()));
    for (std::size_t i = 0; i < pb.x.size(); ++i) {
      const double f = pb.model(pb.x[i], p);
      if (!std::isfinite(f)) return false;
      r(static_cast<Eigen::Index>(i)) = (pb.y[i] - f) * inv_sigma[i];
    }
    return true;
  }

  double chi2(const Eigen::VectorXd& r) const {
    return simd::sum_squares(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())));
  }
};

double fd_step_for(double p, const Transform& t, double rel, bool& forward, bool& backward) {
  double h = rel * (p != 0.0 ? std::abs(p) : 1.0);
  forward = backward = false;
  const bool room_up = t.kind == Kind::Free || t.kind == Kind::Lower || p + h <= t.hi;
  const bool room_down = t.kind == Kind::Free || t.kind == Kind::Upper || p - h >= t.lo;
  if (!room_up && room_down) backward = true;
  if (room_up && !room_down) forward = true;
  if (!room_up && !room_down) {
    h = 0.5 * std::min(t.hi - p, p - t.lo);
    if (h <= 0.0) h = rel * std::abs(t.hi - t.lo);
  }
  return h;
}

Eigen::MatrixXd jacobian_impl(Workspace& ws, std::span<const double> p, bool analytic) {
  const FitProblem& pb = ws.pb;
  const auto n = static_cast<Eigen::Index>(pb.x.size());
  const auto m = static_cast<Eigen::Index>(pb.n_params());
  Eigen::MatrixXd j(n, m);
  if (analytic && pb.gradient) {
    std::vector<double> g(pb.n_params());
    for (Eigen::Index i = 0; i < n; ++i) {
      pb.gradient(pb.x[static_cast<std::size_t>(i)], p, g);
      for (Eigen::Index k = 0; k < m; ++k) j(i, k) = g[static_cast<std::size_t>(k)];
    }
    ++ws.evaluations;
    return j;
  }
  std::vector<double> q(p.begin(), p.end());
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    // Fills column k; returns the largest change and the largest model value.
    auto column = [&](double hi_p, double lo_p) {
      double change = 0.0, level = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double xi = pb.x[static_cast<std::size_t>(i)];
        q[ku] = hi_p;
        const double fp = pb.model(xi, q);
        q[ku] = lo_p;
        const double fm = pb.model(xi, q);
        j(i, k) = (fp - fm) / (hi_p - lo_p);
        change = std::max(change, std::abs(fp - fm));
        level = std::max({level, std::abs(fp), std::abs(fm)});
      }
      q[ku] = p[ku];
      ws.evaluations += 2;
      return std::pair{change, level};
    };
    bool fwd = false, bwd = false;
    const double h = fd_step_for(p[ku], ws.tf[ku], pb.options.fd_step, fwd, bwd);
    const auto [change, level] = column(bwd ? p[ku] : p[ku] + h, fwd ? p[ku] : p[ku] - h);
    // A parameter far below its natural scale (a slope near zero, say) moves
    // the model by only a few ulps; widen the step until the change is
    // resolved to the same relative size as an ordinary step.
    if (!fwd && !bwd && change > 0.0 && change < 0.1 * pb.options.fd_step * level) {
      const double wide = h * std::min(1e3, pb.options.fd_step * level / change);
      const Transform& t = ws.tf[ku];
      const bool room_up = t.kind == Kind::Free || t.kind == Kind::Lower || p[ku] + wide <= t.hi;
      const bool room_down = t.kind == Kind::Free || t.kind == Kind::Upper || p[ku] - wide >= t.lo;
      if (room_up && room_down) column(p[ku] + wide, p[ku] - wide);
    }
  }
  return j;
}

// Column scale making the normal matrix unit-diagonal.
Eigen::VectorXd column_scale(const Eigen::MatrixXd& a) {
  Eigen::VectorXd d(a.rows());
  for (Eigen::Index k = 0; k < a.rows(); ++k) d(k) = a(k, k) > 0.0 ? 1.0 / std::sqrt(a(k, k)) : 1.0;
  return d;
}

double gradient_measure(const Eigen::MatrixXd& jw, const Eigen::VectorXd& r) {
  const double rn = r.norm();
  if (rn == 0.0) return 0.0;
  double g = 0.0;
  for (Eigen::Index k = 0; k < jw.cols(); ++k) {
    const double cn = jw.col(k).norm();
    if (cn > 0.0) g = std::max(g, std::abs(jw.col(k).dot(r)) / (cn * rn));
  }
  return g;
}

}  // namespace

std::size_t FitProblem::n_free() const {
  if (fixed.empty()) return initial.size();
  return static_cast<std::size_t>(std::count(fixed.begin(), fixed.end(), false));
}

void FitProblem::validate() const {
  if (!model) throw DomainError("fit problem has no model");
  if (x.size() != y.size()) throw DomainError("x and y differ in length");
  if (!sigma.empty() && sigma.size() != x.size()) throw DomainError("sigma differs in length from data");
  if (!names.empty() && names.size() != initial.size()) throw DomainError("parameter names do not match parameters");
  if (!bounds.empty() && bounds.size() != initial.size()) throw DomainError("bounds do not match parameters");
  if (!fixed.empty() && fixed.size() != initial.size()) throw DomainError("fixed mask does not match parameters");
  if (initial.empty()) throw DomainError("fit problem has no parameters");
  if (x.size() <= n_free())
    throw DomainError("need more data points (" + std::to_string(x.size()) + ") than free parameters (" +
                      std::to_string(n_free()) + ")");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw DomainError("data contain non-finite values");
    if (!sigma.empty() && (!(sigma[i] > 0.0) || !std::isfinite(sigma[i])))
      throw DomainError("sigma must be positive and finite");
  }
  for (std::size_t k = 0; k < initial.size(); ++k) {
    if (!std::isfinite(initial[k])) throw DomainError("initial parameter is not finite");
    if (!bounds.empty()) {
      const auto& b = bounds[k];
      if (b.lo > b.hi) throw DomainError("lower bound above upper bound");
      if (initial[k] < b.lo || initial[k] > b.hi)
        throw DomainError("initial value of parameter " + std::to_string(k) + " lies outside its bounds");
    }
  }
  if (options.max_iterations < 1 || !(options.nu > 1.0) || !(options.lambda0 > 0.0) ||
      !(options.fd_step > 0.0))
    throw DomainError("invalid fit options");
}

const char* status_name(FitStatus s) {
  switch (s) {
    case FitStatus::Chi2Converged: return "chi2 tolerance";
    case FitStatus::GradientConverged: return "gradient tolerance";
    case FitStatus::StepConverged: return "step tolerance";
    case FitStatus::ExactFit: return "exact fit";
    case FitStatus::MaxIterations: return "iteration limit";
    case FitStatus::Stalled: return "stalled";
  }
  return "?";
}

double FitResult::value(const std::string& name) const {
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == name) return params[k];
  throw DomainError("no parameter named '" + name + "'");
}

double FitResult::stderr_of(const std::string& name) const {
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == name) return stderr_1sigma[k];
  throw DomainError("no parameter named '" + name + "'");
}

Eigen::MatrixXd model_jacobian(const FitProblem& problem, std::span<const double> p, bool analytic) {
  Workspace ws(problem);
  return jacobian_impl(ws, p, analytic);
}

FitResult fit_lm(const FitProblem& pb) {
  pb.validate();
  const FitOptions& opt = pb.options;
  Workspace ws(pb);
  const std::size_t nf = ws.free_idx.size();
  const auto nfi = static_cast<Eigen::Index>(nf);

  std::vector<double> p = pb.initial;
  Eigen::VectorXd u(nfi);
  for (std::size_t j = 0; j < nf; ++j) {
    const std::size_t k = ws.free_idx[j];
    u(static_cast<Eigen::Index>(j)) = ws.tf[k].to_int(p[k]);
  }
  p = ws.to_ext(u, p);

  FitResult res;
  res.model_name = pb.model_name;
  res.names = pb.names;
  res.fixed = pb.fixed.empty() ? std::vector<bool>(pb.n_params(), false) : pb.fixed;
  res.sigma_supplied = !pb.sigma.empty();

  Eigen::VectorXd r;
  if (!ws.residuals(p, r)) throw DomainError("model is not finite at the initial parameters");
  double chi2 = ws.chi2(r);
  res.chi2_history.push_back(chi2);

  // Weighted Jacobian of the model in internal coordinates (free columns).
  auto internal_jacobian = [&](const std::vector<double>& pe) {
    const Eigen::MatrixXd je = jacobian_impl(ws, pe, true);
    Eigen::MatrixXd ji(je.rows(), nfi);
    for (std::size_t j = 0; j < nf; ++j) {
      const std::size_t k = ws.free_idx[j];
      const double s = ws.tf[k].dp_du(pe[k]);
      for (Eigen::Index i = 0; i < je.rows(); ++i)
        ji(i, static_cast<Eigen::Index>(j)) = je(i, static_cast<Eigen::Index>(k)) * s *
                                              ws.inv_sigma[static_cast<std::size_t>(i)];
    }
    return ji;
  };

  double lambda = opt.lambda0;
  FitStatus status = FitStatus::MaxIterations;
  bool done = nf == 0;
  if (nf == 0) status = FitStatus::StepConverged;
  int rejections = 0;
  Eigen::MatrixXd jw = done ? Eigen::MatrixXd() : internal_jacobian(p);

  while (!done) {
    if (chi2 == 0.0) {
      status = FitStatus::ExactFit;
      break;
    }
    const Eigen::VectorXd g = jw.transpose() * r;
    if (gradient_measure(jw, r) < opt.gradient_tol) {
      status = FitStatus::GradientConverged;
      break;
    }
    const Eigen::MatrixXd a = jw.transpose() * jw;
    const Eigen::VectorXd d = column_scale(a);
    Eigen::MatrixXd as = d.asDiagonal() * a * d.asDiagonal();
    as.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(as);
    Eigen::VectorXd step = d.asDiagonal() * ldlt.solve(d.asDiagonal() * g);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      lambda *= opt.nu;
      if (++rejections > opt.max_rejections) {
        status = FitStatus::Stalled;
        break;
      }
      continue;
    }

    const Eigen::VectorXd u_new = u + step;
    const std::vector<double> p_new = ws.to_ext(u_new, p);
    Eigen::VectorXd r_new;
    const bool ok = ws.residuals(p_new, r_new);
    const double chi2_new = ok ? ws.chi2(r_new) : std::numeric_limits<double>::infinity();

    if (chi2_new < chi2) {
      const double drop = chi2 - chi2_new;
      const double predicted = chi2 - (r - jw * step).squaredNorm();
      const double old_chi2 = chi2;
      u = u_new;
      p = p_new;
      r = r_new;
      chi2 = chi2_new;
      // A drop matching the linearised prediction means the model is locally
      // linear; damping only slows the next step then.
      const bool linear = std::abs(drop - predicted) <= 1e-6 * drop;
      lambda = linear ? 1e-15 : std::max(lambda / opt.nu, 1e-15);
      rejections = 0;
      ++res.iterations;
      res.chi2_history.push_back(chi2);
      jw = internal_jacobian(p);
      if (drop <= opt.chi2_rtol * old_chi2) {
        status = FitStatus::Chi2Converged;
        break;
      }
      if (step.norm() <= opt.step_tol * (u.norm() + opt.step_tol)) {
        status = FitStatus::StepConverged;
        break;
      }
      if (res.iterations >= opt.max_iterations) {
        status = FitStatus::MaxIterations;
        break;
      }
    } else {
      lambda *= opt.nu;
      if (++rejections > opt.max_rejections) {
        // No descent left at machine precision: a minimum if the gradient is
        // small, an exact fit if only rounding is left in the residuals.
        double data_norm = 0.0;
        for (std::size_t i = 0; i < pb.y.size(); ++i) data_norm += std::pow(pb.y[i] * ws.inv_sigma[i], 2);
        if (std::sqrt(chi2) <= 1e-10 * std::sqrt(data_norm))
          status = FitStatus::ExactFit;
        else
          status = gradient_measure(jw, r) < std::sqrt(opt.gradient_tol) ? FitStatus::GradientConverged
                                                                           : FitStatus::Stalled;
        break;
      }
    }
  }

  res.status = status;
  res.converged = status != FitStatus::MaxIterations && status != FitStatus::Stalled;
  res.params = p;
  res.chi2 = chi2;
  res.residual_norm = std::sqrt(chi2);
  res.dof = static_cast<int>(pb.x.size()) - static_cast<int>(nf);
  res.reduced_chi2 = res.dof > 0 ? chi2 / res.dof : std::numeric_limits<double>::quiet_NaN();

  // Covariance in external coordinates over the free parameters.
  const std::size_t np = pb.n_params();
  res.covariance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(np));
  res.stderr_1sigma.assign(np, 0.0);
  if (nf > 0) {
    const Eigen::MatrixXd je = jacobian_impl(ws, p, true);
    Eigen::MatrixXd jf(je.rows(), nfi);
    for (std::size_t j = 0; j < nf; ++j)
      for (Eigen::Index i = 0; i < je.rows(); ++i)
        jf(i, static_cast<Eigen::Index>(j)) =
            je(i, static_cast<Eigen::Index>(ws.free_idx[j])) * ws.inv_sigma[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd a = jf.transpose() * jf;
    const Eigen::VectorXd d = column_scale(a);
    const Eigen::MatrixXd as = d.asDiagonal() * a * d.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(as);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double cutoff = 1e-14 * std::max(ev.maxCoeff(), 1e-300);
    Eigen::VectorXd inv(ev.size());
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
      if (ev(k) > cutoff) {
        inv(k) = 1.0 / ev(k);
      } else {
        inv(k) = 0.0;
        res.ridge_used = true;
      }
    }
    Eigen::MatrixXd cov = d.asDiagonal() * (es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose()) *
                          d.asDiagonal();
    if (!res.sigma_supplied) {
      const double s = res.dof > 0 ? res.reduced_chi2 : std::numeric_limits<double>::quiet_NaN();
      cov *= s;
    }
    cov = 0.5 * (cov + cov.transpose());
    for (std::size_t a1 = 0; a1 < nf; ++a1)
      for (std::size_t b1 = 0; b1 < nf; ++b1)
        res.covariance(static_cast<Eigen::Index>(ws.free_idx[a1]), static_cast<Eigen::Index>(ws.free_idx[b1])) =
            cov(static_cast<Eigen::Index>(a1), static_cast<Eigen::Index>(b1));
    for (std::size_t j = 0; j < nf; ++j) {
      const auto k = static_cast<Eigen::Index>(ws.free_idx[j]);
      res.stderr_1sigma[ws.free_idx[j]] = std::sqrt(std::max(0.0, res.covariance(k, k)));
    }
  }
  res.ci95_lo.resize(np);
  res.ci95_hi.resize(np);
  for (std::size_t k = 0; k < np; ++k) {
    res.ci95_lo[k] = p[k] - kZ95 * res.stderr_1sigma[k];
    res.ci95_hi[k] = p[k] + kZ95 * res.stderr_1sigma[k];
  }
  res.evaluations = ws.evaluations;
  return res;
}

}  // namespace kramers::fit
