#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>

#include "lazycnm/problem.hpp"

namespace testing {

using lazycnm::Matrix;
using lazycnm::ProblemInstance;
using lazycnm::Vector;

inline double uniform(std::mt19937_64& g, double a, double b) {
  return a + (b - a) * (static_cast<double>(g() >> 11) * 0x1.0p-53);
}

inline Vector random_vector(std::mt19937_64& g, int n, double a, double b) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform(g, a, b);
  return v;
}

inline Matrix random_symmetric(std::mt19937_64& g, int n, double scale) {
  Matrix A(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) A(i, j) = uniform(g, -scale, scale);
  return 0.5 * (A + A.transpose());
}

/// f = x^T Q x / 2 + b^T x.
inline ProblemInstance quadratic(const Matrix& Q, const Vector& b) {
  ProblemInstance p;
  p.dim = static_cast<int>(Q.rows());
  p.smooth_value = [Q, b](const Vector& x) { return 0.5 * x.dot(Q * x) + b.dot(x); };
  p.smooth_gradient = [Q, b](const Vector& x) -> Vector { return Q * x + b; };
  p.smooth_hessian = [Q](const Vector&) -> Matrix { return Q; };
  p.composite = lazycnm::CompositeDescriptor::zero();
  p.known_L = 0.0;
  return p;
}

/// f = x^T Q x / 2 + (a^T x)^3 / 6; hess f = Q + (a^T x) a a^T, so the Hessian
/// is Lipschitz with L = ||a||^3 exactly.
struct CubicRidge {
  ProblemInstance p;
  double L = 0.0;
};

inline CubicRidge cubic_ridge(const Matrix& Q, const Vector& a) {
  CubicRidge out;
  out.L = std::pow(a.norm(), 3);
  ProblemInstance& p = out.p;
  p.dim = static_cast<int>(Q.rows());
  p.smooth_value = [Q, a](const Vector& x) {
    const double t = a.dot(x);
    return 0.5 * x.dot(Q * x) + t * t * t / 6.0;
  };
  p.smooth_gradient = [Q, a](const Vector& x) -> Vector {
    const double t = a.dot(x);
    return Q * x + 0.5 * t * t * a;
  };
  p.smooth_hessian = [Q, a](const Vector& x) -> Matrix { return Q + a.dot(x) * a * a.transpose(); };
  p.composite = lazycnm::CompositeDescriptor::zero();
  p.known_L = out.L;
  return out;
}

/// Wraps p so that every smooth_value / smooth_gradient call is tallied.
struct Shadow {
  std::shared_ptr<std::int64_t> values = std::make_shared<std::int64_t>(0);
  std::shared_ptr<std::int64_t> gradients = std::make_shared<std::int64_t>(0);
};

inline ProblemInstance shadowed(ProblemInstance p, const Shadow& s) {
  auto f = p.smooth_value;
  auto g = p.smooth_gradient;
  auto vc = s.values;
  auto gc = s.gradients;
  p.smooth_value = [f, vc](const Vector& x) {
    ++*vc;
    return f(x);
  };
  if (g) {
    p.smooth_gradient = [g, gc](const Vector& x) {
      ++*gc;
      return g(x);
    };
  }
  return p;
}

}  // namespace testing
