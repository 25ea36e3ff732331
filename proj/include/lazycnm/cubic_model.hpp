#pragma once

// Cubic-regularised model
//
//   M(y) = f(x) + <g, y - x> + 1/2 <B (y - x), y - x> + sigma/6 ||y - x||^3
//
// and inexact minimisation of M + psi. A trial point is accepted when
//
//   M(x+) + psi(x+) <= F(x)   and   ||grad M(x+) + psi'(x+)|| <= sigma/4 ||x+ - x||^2
//
// for a subgradient psi'(x+) that the solver reports alongside x+.

#include <optional>

#include "lazycnm/problem.hpp"

namespace lazycnm {

struct CubicModel {
  Vector center;
  double f_center = 0.0;  // f(x), the smooth part only
  Vector g;
  Matrix B;
  double sigma = 1.0;
  CompositeDescriptor composite;

  /// Throws dimension_mismatch / invalid_argument on inconsistent data.
  void validate() const;
};

enum class SubproblemMethod {
  automatic,          // spectral for psi = 0, proximal gradient otherwise
  spectral,           // exact global minimiser via eigendecomposition (psi = 0)
  bfgs_armijo,        // BFGS with Armijo backtracking from y = x (psi = 0)
  proximal_gradient,  // backtracking proximal gradient from y = x
};

struct SolveOptions {
  SubproblemMethod method = SubproblemMethod::automatic;
  bool require_second_order = false;
  int max_inner_iters = 500;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
};

struct SubproblemSolution {
  Vector x_plus;
  Vector psi_sub;  // element of d psi(x+) certified in the residual below
  double r = 0.0;  // ||x+ - x||
  bool model_decrease_ok = false;
  double grad_residual = 0.0;  // ||grad M(x+) + psi_sub||
  std::optional<double> so_margin;
  int inner_iters = 0;
  bool hard_case = false;
};

/// M(y), the smooth model without psi.
double model_value(const CubicModel& m, const Vector& y);
/// M(x + s) - f(x), evaluated without forming f(x) + ... to avoid cancellation.
double model_increment(const CubicModel& m, const Vector& s);
Vector model_gradient(const CubicModel& m, const Vector& y);

/// Throws subproblem_stalled when no certified point is found within
/// max_inner_iters (or, for the spectral path, when roundoff defeats the
/// certificate), and dimension_mismatch on bad input.
SubproblemSolution solve_subproblem(const CubicModel& m, const SolveOptions& opts = {});

const Vector& induced_subgradient(const CubicModel& m, const SubproblemSolution& s);

/// lambda_min(B + sigma r I + hess_psi).
double check_second_order(const CubicModel& m, const SubproblemSolution& s, const Matrix& hess_psi);

/// True when s satisfies both lines of the acceptance test for m, including
/// the exact-stationarity rule for r = 0.
bool satisfies_acceptance(const CubicModel& m, const SubproblemSolution& s);

}  // namespace lazycnm
