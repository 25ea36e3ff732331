#pragma once

// Composite problem F(x) = f(x) + psi(x), counted oracles and the
// stationarity residual used for termination.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lazycnm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorCode {
  budget_exhausted,
  nonfinite_value,
  no_gradient_oracle,
  no_hessian_oracle,
  dimension_mismatch,
  subproblem_stalled,
  invalid_argument,
  unknown_problem,
  empty_input,
  io_error,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Convex composite part psi. Built-in kinds are closed, proper and convex
/// by construction; for `custom` the caller owns that obligation.
class CompositeDescriptor {
 public:
  enum class Kind { zero, box_indicator, l1, custom };

  using ValueFn = std::function<double(const Vector&)>;
  /// prox(v, step) = argmin_y { psi(y) + ||y - v||^2 / (2 step) }
  using ProxFn = std::function<Vector(const Vector&, double)>;
  using HessianFn = std::function<Matrix(const Vector&)>;

  CompositeDescriptor() = default;

  static CompositeDescriptor zero();
  /// Lower/upper entries may be -inf/+inf. Requires lower <= upper.
  static CompositeDescriptor box(Vector lower, Vector upper);
  static CompositeDescriptor l1(double weight);
  static CompositeDescriptor custom(ValueFn value, ProxFn prox = {}, HessianFn hessian = {});

  Kind kind() const noexcept { return kind_; }
  bool is_zero() const noexcept { return kind_ == Kind::zero; }
  bool has_prox() const noexcept { return kind_ != Kind::custom || static_cast<bool>(prox_); }

  /// psi(x); +inf outside the domain.
  double value(const Vector& x) const;
  Vector prox(const Vector& v, double step) const;
  /// Hessian of psi where it is twice differentiable (zero for the built-ins).
  std::optional<Matrix> hessian(const Vector& x) const;

  /// Element psi' of d psi(x) minimising ||grad + psi'||, for box and l1.
  /// Returns nullopt for custom kinds, where no closed form is known.
  std::optional<Vector> min_norm_subgradient(const Vector& x, const Vector& grad) const;

  const Vector& lower() const noexcept { return lower_; }
  const Vector& upper() const noexcept { return upper_; }
  double weight() const noexcept { return weight_; }

 private:
  Kind kind_ = Kind::zero;
  Vector lower_;
  Vector upper_;
  double weight_ = 0.0;
  ValueFn value_;
  ProxFn prox_;
  HessianFn hessian_;
};

struct ProblemInstance {
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;
  using HessianFn = std::function<Matrix(const Vector&)>;

  int dim = 0;
  ValueFn smooth_value;
  GradientFn smooth_gradient;  // empty for zeroth-order-only instances
  HessianFn smooth_hessian;    // diagnostics only
  CompositeDescriptor composite;
  std::optional<double> known_L;
  std::optional<double> known_mu;
  std::optional<double> lower_bound_hint;

  bool has_gradient() const noexcept { return static_cast<bool>(smooth_gradient); }
  bool has_hessian() const noexcept { return static_cast<bool>(smooth_hessian); }

  /// Throws invalid_argument when dim < 1 or the value oracle is missing.
  void validate() const;
};

enum class BudgetKind {
  fo_calls,  // f_evals + grad_evals
  zo_calls,  // f_evals
};

/// Tallies oracle accesses for one run. Hessian calls are diagnostics and
/// never count against a budget.
class OracleCounter {
 public:
  OracleCounter() = default;
  OracleCounter(std::optional<std::int64_t> budget, BudgetKind kind) : budget_(budget), kind_(kind) {}

  std::int64_t f_evals() const noexcept { return f_evals_; }
  std::int64_t grad_evals() const noexcept { return grad_evals_; }
  std::int64_t hess_evals() const noexcept { return hess_evals_; }
  std::int64_t fo_calls() const noexcept { return f_evals_ + grad_evals_; }
  std::int64_t zo_calls() const noexcept { return f_evals_; }

  std::optional<std::int64_t> budget() const noexcept { return budget_; }
  BudgetKind budget_kind() const noexcept { return kind_; }

  /// The tally the budget is measured against.
  std::int64_t tally() const noexcept { return kind_ == BudgetKind::fo_calls ? fo_calls() : zo_calls(); }
  bool exhausted() const noexcept { return budget_ && tally() >= *budget_; }
  /// Number of budgeted calls still allowed (max int64 when unbounded).
  std::int64_t remaining() const noexcept;

  // Each charge_* checks the budget first and throws budget_exhausted
  // without incrementing when the call would exceed it.
  void charge_value();
  void charge_gradient();
  void charge_hessian() noexcept { ++hess_evals_; }
  void charge_unbudgeted_gradient() noexcept { ++grad_evals_; }

 private:
  std::int64_t f_evals_ = 0;
  std::int64_t grad_evals_ = 0;
  std::int64_t hess_evals_ = 0;
  std::optional<std::int64_t> budget_;
  BudgetKind kind_ = BudgetKind::fo_calls;
};

double counted_value(const ProblemInstance& p, OracleCounter& c, const Vector& x);
Vector counted_gradient(const ProblemInstance& p, OracleCounter& c, const Vector& x);
/// Analytic Hessian (diagnostic). Throws no_hessian_oracle when absent.
Matrix counted_hessian(const ProblemInstance& p, OracleCounter& c, const Vector& x);

/// Gradient query that never consults the budget (diagnostic trace checks in
/// zeroth-order runs). Still increments grad_evals.
Vector diagnostic_gradient(const ProblemInstance& p, OracleCounter& c, const Vector& x);

/// ||grad + psi_sub||.
double stationarity_residual(const ProblemInstance& p, const Vector& grad, const Vector& psi_sub);

/// F(x) = f(x) + psi(x) with one counted value call.
double counted_objective(const ProblemInstance& p, OracleCounter& c, const Vector& x);

}  // namespace lazycnm
