#include "lazycnm/finite_diff.hpp"

#include <cmath>

namespace lazycnm {

namespace {

void check_step(double h, const char* what) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorCode::invalid_argument, what);
}

// IEEE addition is commutative, so the result is bit-exactly symmetric.
Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace

SymmetricMatrixApprox fo_hessian_approx(const ProblemInstance& p, OracleCounter& c, const Vector& x, double h) {
  check_step(h, "finite-difference step h must be positive and finite");
  const int n = p.dim;
  const Vector g0 = counted_gradient(p, c, x);
  Matrix a(n, n);
  Vector xh = x;
  for (int j = 0; j < n; ++j) {
    xh[j] = x[j] + h;
    a.col(j) = (counted_gradient(p, c, xh) - g0) / h;
    xh[j] = x[j];
  }
  return {symmetrize(a), SymmetricMatrixApprox::Source::fo_from_gradients, h, g0};
}

Vector zo_gradient_approx(const ProblemInstance& p, OracleCounter& c, const Vector& x, double h_g) {
  check_step(h_g, "finite-difference step h_g must be positive and finite");
  const int n = p.dim;
  Vector g(n);
  Vector xh = x;
  for (int i = 0; i < n; ++i) {
    xh[i] = x[i] + h_g;
    const double fp = counted_value(p, c, xh);
    xh[i] = x[i] - h_g;
    const double fm = counted_value(p, c, xh);
    xh[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h_g);
  }
  return g;
}

SymmetricMatrixApprox zo_hessian_approx(const ProblemInstance& p, OracleCounter& c, const Vector& x, double h) {
  check_step(h, "finite-difference step h must be positive and finite");
  const int n = p.dim;
  const double f0 = counted_value(p, c, x);
  Vector fi(n);
  Vector xh = x;
  for (int i = 0; i < n; ++i) {
    xh[i] = x[i] + h;
    fi[i] = counted_value(p, c, xh);
    xh[i] = x[i];
  }
  const double h2 = h * h;
  Matrix b(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      xh[i] += h;
      xh[j] += h;
      const double fij = counted_value(p, c, xh);
      xh[i] = x[i];
      xh[j] = x[j];
      // (fij - fi - fj + f0) / h^2
      const double a = ((fij - fi[i]) - (fi[j] - f0)) / h2;
      b(i, j) = a;
      b(j, i) = a;
    }
  }
  return {std::move(b), SymmetricMatrixApprox::Source::zo_from_values, h, std::nullopt};
}

SymmetricMatrixApprox analytic_hessian(const ProblemInstance& p, OracleCounter& c, const Vector& x) {
  return {symmetrize(counted_hessian(p, c, x)), SymmetricMatrixApprox::Source::analytic, 0.0, std::nullopt};
}

}  // namespace lazycnm
