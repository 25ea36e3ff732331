#pragma once

// Forward/central finite-difference estimators for the gradient and Hessian
// of the smooth part. All estimators charge the supplied counter exactly.

#include <optional>

#include "lazycnm/problem.hpp"

namespace lazycnm {

struct SymmetricMatrixApprox {
  enum class Source { fo_from_gradients, zo_from_values, analytic };

  Matrix B;  // B == B^T exactly
  Source source = Source::analytic;
  double h_used = 0.0;
  /// grad f(x) at the base point, set by fo_hessian_approx only.
  std::optional<Vector> base_gradient;
};

/// B = (A + A^T)/2, column j of A = (grad f(x + h e_j) - grad f(x)) / h.
/// Charges exactly n + 1 gradient calls.
SymmetricMatrixApprox fo_hessian_approx(const ProblemInstance& p, OracleCounter& c, const Vector& x, double h);

/// Central differences g_i = (f(x + h e_i) - f(x - h e_i)) / (2h).
/// Charges exactly 2n value calls.
Vector zo_gradient_approx(const ProblemInstance& p, OracleCounter& c, const Vector& x, double h_g);

/// A_ij = (f(x + h e_i + h e_j) - f(x + h e_i) - f(x + h e_j) + f(x)) / h^2,
/// upper triangle evaluated and mirrored. Charges exactly n(n+1)/2 + n + 1
/// value calls.
SymmetricMatrixApprox zo_hessian_approx(const ProblemInstance& p, OracleCounter& c, const Vector& x, double h);

/// Wraps an analytic Hessian (diagnostic path), symmetrised.
SymmetricMatrixApprox analytic_hessian(const ProblemInstance& p, OracleCounter& c, const Vector& x);

}  // namespace lazycnm
