#pragma once

// m consecutive inexact cubic steps that share one Hessian approximation B
// (the anchor), with the cumulative-progress test that decides whether the
// caller must retry with a larger sigma.

#include <optional>
#include <vector>

#include "lazycnm/cubic_model.hpp"
#include "lazycnm/finite_diff.hpp"
#include "lazycnm/problem.hpp"

namespace lazycnm {

enum class StepStatus { success, solution, halt };

const char* to_string(StepStatus s);

struct StepRecord {
  int t = 0;  // the step that produced x_{t+1}
  Vector x;   // x_{t+1}
  double r = 0.0;
  double F = 0.0;  // F(x_{t+1}); NaN when the step stopped before evaluating it
  double grad_residual = 0.0;
  double stationarity = 0.0;  // ||grad f(x_{t+1}) + psi'||; NaN when unavailable
  std::optional<double> delta;  // max{stationarity, (2/3)^{10/3} xi^2 / sigma}
  std::int64_t f_evals = 0;     // counter snapshot after the step
  std::int64_t grad_evals = 0;
  bool subproblem_stalled = false;
};

struct InnerResult {
  Vector final;
  StepStatus status = StepStatus::halt;
  int steps_taken = 0;
  std::vector<StepRecord> trace;
  Vector anchor;
  double final_F = 0.0;  // F(final) when known, else NaN
};

struct InnerOptions {
  SolveOptions solve;
  bool second_order = false;
  /// F(x0) already known to the caller; saves one value call.
  std::optional<double> F0;
  /// grad f(x0) already known to the caller (first-order loop only).
  std::optional<Vector> grad0;
  /// Compute the true stationarity of each new point from the analytic
  /// gradient (zeroth-order loop), without charging the budget.
  bool diagnostic_stationarity = false;
  /// Record Delta_t using the analytic Hessian when one is available.
  bool diagnostic_delta = false;
};

/// Thrown when the oracle budget runs out mid-loop; carries the partial result.
class InnerInterrupted : public Error {
 public:
  explicit InnerInterrupted(InnerResult partial)
      : Error(ErrorCode::budget_exhausted, "inner loop interrupted"), partial_(std::move(partial)) {}
  const InnerResult& partial() const noexcept { return partial_; }

 private:
  InnerResult partial_;
};

/// eps^{3/2} (t + 1) / (384 sigma^{1/2})
double progress_threshold(double sigma, double eps, int t);

/// First-order loop: exact gradients, early exit on stationarity unless
/// second_order is set.
InnerResult cubic_steps(const ProblemInstance& p, OracleCounter& c, const Vector& x, const SymmetricMatrixApprox& B,
                        double sigma, int m, double eps, const InnerOptions& opts = {});

/// h_g = 3^{-1/3} (eps m / (sigma sqrt(n)))^{1/2}
double zo_gradient_step(double eps, int m, double sigma, int n);

/// Zeroth-order loop: central-difference gradients at interval
/// zo_gradient_step(eps, m, sigma, n); never returns solution.
InnerResult zero_order_cubic_steps(const ProblemInstance& p, OracleCounter& c, const Vector& x,
                                   const SymmetricMatrixApprox& B, double sigma, int m, double eps,
                                   const InnerOptions& opts = {});

/// max{-lambda_min(hess f(x) + hess psi(x)), 0} from given Hessians.
double xi_from_hessian(const Matrix& hess_F);

}  // namespace lazycnm
