#include "lazycnm/lazy_steps.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace lazycnm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_inputs(const ProblemInstance& p, const Vector& x, const SymmetricMatrixApprox& B, double sigma, int m,
                  double eps) {
  p.validate();
  if (x.size() != p.dim || B.B.rows() != p.dim || B.B.cols() != p.dim) {
    throw Error(ErrorCode::dimension_mismatch, "inner loop inputs");
  }
  if (!(sigma > 0.0) || !(eps > 0.0) || m < 1) {
    throw Error(ErrorCode::invalid_argument, "inner loop needs sigma > 0, eps > 0, m >= 1");
  }
}

std::optional<double> delta_diagnostic(const ProblemInstance& p, OracleCounter& c, const Vector& x, double sigma,
                                       double stationarity) {
  if (!p.has_hessian()) return std::nullopt;
  const auto hess_psi = p.composite.hessian(x);
  if (!hess_psi) return std::nullopt;
  const double xi = xi_from_hessian(counted_hessian(p, c, x) + *hess_psi);
  return std::max(stationarity, std::pow(2.0 / 3.0, 10.0 / 3.0) * xi * xi / sigma);
}

void snapshot(StepRecord& rec, const OracleCounter& c) {
  rec.f_evals = c.f_evals();
  rec.grad_evals = c.grad_evals();
}

}  // namespace

const char* to_string(StepStatus s) {
  switch (s) {
    case StepStatus::success: return "success";
    case StepStatus::solution: return "solution";
    case StepStatus::halt: return "halt";
  }
  return "unknown";
}

double progress_threshold(double sigma, double eps, int t) {
  return std::pow(eps, 1.5) * static_cast<double>(t + 1) / (384.0 * std::sqrt(sigma));
}

double zo_gradient_step(double eps, int m, double sigma, int n) {
  return std::pow(3.0, -1.0 / 3.0) * std::sqrt(eps * m / (sigma * std::sqrt(static_cast<double>(n))));
}

double xi_from_hessian(const Matrix& hess_F) {
  const Eigen::SelfAdjointEigenSolver<Matrix> es(hess_F, Eigen::EigenvaluesOnly);
  return std::max(-es.eigenvalues()[0], 0.0);
}

InnerResult cubic_steps(const ProblemInstance& p, OracleCounter& c, const Vector& x, const SymmetricMatrixApprox& B,
                        double sigma, int m, double eps, const InnerOptions& opts) {
  check_inputs(p, x, B, sigma, m, eps);
  SolveOptions solve = opts.solve;
  solve.require_second_order = opts.second_order;

  InnerResult res;
  res.anchor = x;
  res.final = x;
  res.final_F = kNaN;
  try {
    const double F0 = opts.F0 ? *opts.F0 : counted_objective(p, c, x);
    res.final_F = F0;
    Vector xt = x;
    double Ft = F0;
    Vector gt = opts.grad0 ? *opts.grad0 : counted_gradient(p, c, x);

    for (int t = 0; t < m; ++t) {
      const CubicModel model{xt, Ft - p.composite.value(xt), gt, B.B, sigma, p.composite};
      StepRecord rec;
      rec.t = t;
      SubproblemSolution sol;
      try {
        sol = solve_subproblem(model, solve);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::subproblem_stalled) throw;
        rec.subproblem_stalled = true;
        rec.x = xt;
        rec.F = kNaN;
        rec.stationarity = kNaN;
        snapshot(rec, c);
        res.trace.push_back(rec);
        res.status = StepStatus::halt;
        res.steps_taken = t;
        res.final = xt;
        res.final_F = Ft;
        return res;
      }
      rec.x = sol.x_plus;
      rec.r = sol.r;
      rec.grad_residual = sol.grad_residual;
      rec.F = kNaN;

      Vector g_next = counted_gradient(p, c, sol.x_plus);
      rec.stationarity = stationarity_residual(p, g_next, induced_subgradient(model, sol));
      if (!opts.second_order && rec.stationarity <= eps) {
        snapshot(rec, c);
        res.trace.push_back(rec);
        res.status = StepStatus::solution;
        res.steps_taken = t;
        res.final = std::move(sol.x_plus);
        res.final_F = kNaN;
        return res;
      }

      const double F_next = counted_objective(p, c, sol.x_plus);
      rec.F = F_next;
      if (opts.diagnostic_delta) rec.delta = delta_diagnostic(p, c, sol.x_plus, sigma, rec.stationarity);
      snapshot(rec, c);
      res.trace.push_back(rec);

      if (!(F0 - F_next >= progress_threshold(sigma, eps, t))) {
        res.status = StepStatus::halt;
        res.steps_taken = t;
        res.final = std::move(sol.x_plus);
        res.final_F = F_next;
        return res;
      }
      xt = std::move(sol.x_plus);
      Ft = F_next;
      gt = std::move(g_next);
    }
    res.status = StepStatus::success;
    res.steps_taken = m;
    res.final = std::move(xt);
    res.final_F = Ft;
    return res;
  } catch (const InnerInterrupted&) {
    throw;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::budget_exhausted) throw;
    throw InnerInterrupted(std::move(res));
  }
}

InnerResult zero_order_cubic_steps(const ProblemInstance& p, OracleCounter& c, const Vector& x,
                                   const SymmetricMatrixApprox& B, double sigma, int m, double eps,
                                   const InnerOptions& opts) {
  check_inputs(p, x, B, sigma, m, eps);
  SolveOptions solve = opts.solve;
  solve.require_second_order = opts.second_order;
  const double h_g = zo_gradient_step(eps, m, sigma, p.dim);

  InnerResult res;
  res.anchor = x;
  res.final = x;
  res.final_F = kNaN;
  try {
    const double F0 = opts.F0 ? *opts.F0 : counted_objective(p, c, x);
    res.final_F = F0;
    Vector xt = x;
    double Ft = F0;

    for (int t = 0; t < m; ++t) {
      const Vector gt = zo_gradient_approx(p, c, xt, h_g);
      const CubicModel model{xt, Ft - p.composite.value(xt), gt, B.B, sigma, p.composite};
      StepRecord rec;
      rec.t = t;
      SubproblemSolution sol;
      try {
        sol = solve_subproblem(model, solve);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::subproblem_stalled) throw;
        rec.subproblem_stalled = true;
        rec.x = xt;
        rec.F = kNaN;
        rec.stationarity = kNaN;
        snapshot(rec, c);
        res.trace.push_back(rec);
        res.status = StepStatus::halt;
        res.steps_taken = t;
        res.final = xt;
        res.final_F = Ft;
        return res;
      }
      rec.x = sol.x_plus;
      rec.r = sol.r;
      rec.grad_residual = sol.grad_residual;

      const double F_next = counted_objective(p, c, sol.x_plus);
      rec.F = F_next;
      rec.stationarity = kNaN;
      if (opts.diagnostic_stationarity && p.has_gradient()) {
        rec.stationarity =
            stationarity_residual(p, diagnostic_gradient(p, c, sol.x_plus), induced_subgradient(model, sol));
      }
      if (opts.diagnostic_delta && p.has_gradient() && std::isfinite(rec.stationarity)) {
        rec.delta = delta_diagnostic(p, c, sol.x_plus, sigma, rec.stationarity);
      }
      snapshot(rec, c);
      res.trace.push_back(rec);

      if (!(F0 - F_next >= progress_threshold(sigma, eps, t))) {
        res.status = StepStatus::halt;
        res.steps_taken = t;
        res.final = std::move(sol.x_plus);
        res.final_F = F_next;
        return res;
      }
      xt = std::move(sol.x_plus);
      Ft = F_next;
    }
    res.status = StepStatus::success;
    res.steps_taken = m;
    res.final = std::move(xt);
    res.final_F = Ft;
    return res;
  } catch (const InnerInterrupted&) {
    throw;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::budget_exhausted) throw;
    throw InnerInterrupted(std::move(res));
  }
}

}  // namespace lazycnm
