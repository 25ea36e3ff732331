#include "lazycnm/cubic_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace lazycnm {

namespace {

// Stationarity demanded of a zero-length step, relative to 1 + ||g||.
constexpr double kZeroStepTol = 1e-10;
// |gamma_J| below this fraction of ||g|| counts as the hard case.
constexpr double kHardCaseTol = 1e-13;
constexpr double kSecondOrderTol = 1e-10;

double psi_value(const CubicModel& m, const Vector& y) { return m.composite.value(y); }

bool residual_ok(const CubicModel& m, double r, double residual) {
  if (r > 0.0) return residual <= 0.25 * m.sigma * r * r;
  return residual <= kZeroStepTol * (1.0 + m.g.norm());
}

SubproblemSolution make_solution(const CubicModel& m, Vector y, Vector psi_sub, int iters) {
  SubproblemSolution sol;
  const Vector s = y - m.center;
  sol.r = s.norm();
  sol.grad_residual = (model_gradient(m, y) + psi_sub).norm();
  sol.model_decrease_ok = model_increment(m, s) + psi_value(m, y) - psi_value(m, m.center) <= 0.0;
  sol.x_plus = std::move(y);
  sol.psi_sub = std::move(psi_sub);
  sol.inner_iters = iters;
  return sol;
}

// G(s) = g + B s + sigma/2 ||s|| s
Vector stationarity_map(const Matrix& B, const Vector& g, double sigma, const Vector& s) {
  return g + B * s + (0.5 * sigma * s.norm()) * s;
}

struct SpectralStep {
  Vector s;
  bool hard_case = false;
  int iters = 0;
};

// Global minimiser of <g,s> + 1/2 <Bs,s> + sigma/6 ||s||^3. It solves
// (B + lambda I) s = -g with ||s|| = 2 lambda / sigma and
// lambda >= max(0, -lambda_min(B)). The root is searched in
// delta = lambda - max(0, -lambda_min) using the shifted spectrum
// mu_i = lambda_i + max(0, -lambda_min) >= 0.
SpectralStep spectral_step(const Matrix& B, const Vector& g, double sigma) {
  const Eigen::Index n = g.size();
  const Eigen::SelfAdjointEigenSolver<Matrix> es(B);
  const Vector& lam = es.eigenvalues();
  const Matrix& V = es.eigenvectors();
  const Vector gamma = V.transpose() * g;
  const double gnorm = g.norm();

  const double lam_min = lam[0];
  const double lo = std::max(0.0, -lam_min);
  Vector mu(n);
  for (Eigen::Index i = 0; i < n; ++i) mu[i] = lam_min < 0.0 ? lam[i] - lam_min : lam[i];

  SpectralStep out;

  if (lo > 0.0) {
    const double eig_tol = 1e-12 * std::max(1.0, lam.cwiseAbs().maxCoeff());
    double gamma_j = 0.0;
    double rest_sq = 0.0;
    Vector c = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (mu[i] <= eig_tol) {
        gamma_j += gamma[i] * gamma[i];
      } else {
        c[i] = -gamma[i] / mu[i];
        rest_sq += c[i] * c[i];
      }
    }
    const double target = 2.0 * lo / sigma;
    if (std::sqrt(gamma_j) <= kHardCaseTol * gnorm && rest_sq <= target * target) {
      // Hard case: boundary solution plus a leading-eigenvector component.
      // Both signs are global minimisers; take the lexicographically larger step.
      const double alpha = std::sqrt(target * target - rest_sq);
      Vector cp = c;
      Vector cm = c;
      cp[0] += alpha;
      cm[0] -= alpha;
      Vector sp = V * cp;
      Vector sm = V * cm;
      const bool minus_larger =
          std::lexicographical_compare(sp.data(), sp.data() + n, sm.data(), sm.data() + n);
      out.s = minus_larger ? std::move(sm) : std::move(sp);
      out.hard_case = true;
      return out;
    }
  }

  if (gnorm == 0.0) {
    out.s = Vector::Zero(n);
    return out;
  }

  auto norm_and_slope = [&](double d, double& w, double& dw3) {
    double sq = 0.0;
    double cube = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double den = mu[i] + d;
      if (gamma[i] == 0.0) continue;
      const double q = gamma[i] / den;
      sq += q * q;
      cube += q * q / den;
    }
    w = std::sqrt(sq);
    dw3 = cube;  // -d||s||/dd * ||s||
  };

  // phi(d) = ||s(d)|| - 2 (lo + d) / sigma is decreasing; phi(0) > 0 here.
  double d_lo = 0.0;
  double d_hi = std::sqrt(0.5 * sigma * gnorm);
  {
    double w = 0.0, dw3 = 0.0;
    norm_and_slope(d_hi, w, dw3);
    while (w - 2.0 * (lo + d_hi) / sigma > 0.0) {
      d_lo = d_hi;
      d_hi *= 2.0;
      norm_and_slope(d_hi, w, dw3);
    }
  }

  // Safeguarded Newton on 1/||s(d)|| - sigma / (2 (lo + d)), which is
  // increasing and close to linear near a pole of ||s||.
  double d = d_hi;
  int it = 0;
  for (; it < 400; ++it) {
    double w = 0.0, dw3 = 0.0;
    norm_and_slope(d, w, dw3);
    const double phi = w - 2.0 * (lo + d) / sigma;
    if (phi > 0.0) {
      d_lo = d;
    } else if (phi < 0.0) {
      d_hi = d;
    } else {
      break;
    }
    const double psi = 1.0 / w - sigma / (2.0 * (lo + d));
    const double dpsi = dw3 / (w * w * w) + sigma / (2.0 * (lo + d) * (lo + d));
    double next = d - psi / dpsi;
    if (!(next > d_lo && next < d_hi)) next = 0.5 * (d_lo + d_hi);
    if (next == d || d_hi - d_lo <= 4.0 * std::numeric_limits<double>::epsilon() * d_hi) break;
    d = next;
  }

  Vector c(n);
  for (Eigen::Index i = 0; i < n; ++i) c[i] = gamma[i] == 0.0 ? 0.0 : -gamma[i] / (mu[i] + d);
  out.s = V * c;
  out.iters = it;
  return out;
}

// A few Newton corrections on G(s) = 0 in case eigen-space rounding leaves the
// residual above the acceptance bound for very short steps.
Vector polish(const Matrix& B, const Vector& g, double sigma, Vector s) {
  const Eigen::Index n = g.size();
  double res = stationarity_map(B, g, sigma, s).norm();
  for (int k = 0; k < 3; ++k) {
    const double r = s.norm();
    if (r == 0.0) break;
    Matrix J = B + (0.5 * sigma * r) * Matrix::Identity(n, n) + (0.5 * sigma / r) * (s * s.transpose());
    const Vector step = J.ldlt().solve(-stationarity_map(B, g, sigma, s));
    if (!step.allFinite()) break;
    Vector trial = s + step;
    const double trial_res = stationarity_map(B, g, sigma, trial).norm();
    if (!(trial_res < res)) break;
    s = std::move(trial);
    res = trial_res;
  }
  return s;
}

SubproblemSolution solve_spectral(const CubicModel& m) {
  SpectralStep step = spectral_step(m.B, m.g, m.sigma);
  SubproblemSolution sol = make_solution(m, m.center + step.s, Vector::Zero(m.g.size()), step.iters);
  sol.hard_case = step.hard_case;
  if (!residual_ok(m, sol.r, sol.grad_residual)) {
    const Vector s = polish(m.B, m.g, m.sigma, std::move(step.s));
    SubproblemSolution polished = make_solution(m, m.center + s, Vector::Zero(m.g.size()), step.iters);
    if (polished.model_decrease_ok) {
      polished.hard_case = step.hard_case;
      sol = std::move(polished);
    }
  }
  return sol;
}

SubproblemSolution solve_bfgs(const CubicModel& m, const SolveOptions& opts) {
  const Eigen::Index n = m.g.size();
  Vector s = Vector::Zero(n);
  Vector grad = m.g;
  double val = 0.0;
  Matrix H = Matrix::Identity(n, n);
  bool scaled = false;
  for (int it = 0; it < opts.max_inner_iters; ++it) {
    if (residual_ok(m, s.norm(), grad.norm())) {
      return make_solution(m, m.center + s, Vector::Zero(n), it);
    }
    Vector dir = -H * grad;
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {
      H.setIdentity();
      dir = -grad;
      slope = -grad.squaredNorm();
    }
    double t = 1.0;
    Vector s_new;
    double val_new = 0.0;
    while (true) {
      s_new = s + t * dir;
      val_new = model_increment(m, s_new);
      if (val_new <= val + opts.armijo_c1 * t * slope) break;
      t *= opts.backtrack;
      if (t < 1e-30) throw Error(ErrorCode::subproblem_stalled, "Armijo backtracking failed");
    }
    Vector grad_new = stationarity_map(m.B, m.g, m.sigma, s_new);
    const Vector p = s_new - s;
    const Vector y = grad_new - grad;
    const double ys = y.dot(p);
    if (ys > 1e-16 * y.norm() * p.norm()) {
      if (!scaled) {
        H = (ys / y.squaredNorm()) * Matrix::Identity(n, n);
        scaled = true;
      }
      const double rho = 1.0 / ys;
      const Vector Hy = H * y;
      // H <- (I - rho p y^T) H (I - rho y p^T) + rho p p^T
      H += (rho * rho * y.dot(Hy) + rho) * (p * p.transpose()) - rho * (Hy * p.transpose() + p * Hy.transpose());
    }
    s = std::move(s_new);
    grad = std::move(grad_new);
    val = val_new;
  }
  if (residual_ok(m, s.norm(), grad.norm())) {
    return make_solution(m, m.center + s, Vector::Zero(n), opts.max_inner_iters);
  }
  throw Error(ErrorCode::subproblem_stalled, "BFGS did not certify the acceptance test");
}

Vector certified_subgradient(const CubicModel& m, const Vector& y, const Vector& grad_y, const Vector& prox_induced) {
  if (auto sub = m.composite.min_norm_subgradient(y, grad_y)) return *sub;
  return prox_induced;
}

SubproblemSolution solve_proximal(const CubicModel& m, const SolveOptions& opts) {
  if (!m.composite.has_prox()) {
    throw Error(ErrorCode::invalid_argument, "composite part has no prox operator");
  }
  const double psi_center = psi_value(m, m.center);
  if (!std::isfinite(psi_center)) throw Error(ErrorCode::invalid_argument, "model center outside dom psi");

  Vector y = m.center;
  Vector grad_y = m.g;
  // Zero step first: accept x itself only under exact stationarity.
  if (auto sub = m.composite.min_norm_subgradient(y, grad_y)) {
    if (residual_ok(m, 0.0, (grad_y + *sub).norm())) return make_solution(m, y, *sub, 0);
  }

  double obj_y = psi_center;  // M(y) - f(x) + psi(y)
  double step = 1.0 / (m.B.norm() + std::sqrt(m.sigma * m.g.norm()) + 1e-12);
  for (int it = 1; it <= opts.max_inner_iters; ++it) {
    Vector y_new;
    double obj_new = 0.0;
    double smooth_new = 0.0;
    while (true) {
      y_new = m.composite.prox(y - step * grad_y, step);
      const Vector d = y_new - y;
      smooth_new = model_increment(m, y_new - m.center);
      const double smooth_y = obj_y - psi_value(m, y);
      if (smooth_new <= smooth_y + grad_y.dot(d) + d.squaredNorm() / (2.0 * step)) break;
      step *= opts.backtrack;
      if (step < 1e-30) throw Error(ErrorCode::subproblem_stalled, "proximal backtracking failed");
    }
    obj_new = smooth_new + psi_value(m, y_new);
    const Vector grad_new = model_gradient(m, y_new);
    const Vector prox_sub = (y - y_new) / step - grad_y;
    Vector sub = certified_subgradient(m, y_new, grad_new, prox_sub);
    const double r = (y_new - m.center).norm();
    const double residual = (grad_new + sub).norm();
    y = std::move(y_new);
    grad_y = grad_new;
    obj_y = obj_new;
    if (residual_ok(m, r, residual) && obj_y <= psi_center) {
      SubproblemSolution sol = make_solution(m, y, std::move(sub), it);
      if (sol.model_decrease_ok) return sol;
    }
    step = std::min(2.0 * step, 1e12);
  }
  throw Error(ErrorCode::subproblem_stalled, "proximal gradient did not certify the acceptance test");
}

}  // namespace

void CubicModel::validate() const {
  const Eigen::Index n = center.size();
  if (g.size() != n || B.rows() != n || B.cols() != n) {
    throw Error(ErrorCode::dimension_mismatch, "cubic model data sizes disagree");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(ErrorCode::invalid_argument, "sigma must be positive");
}

double model_increment(const CubicModel& m, const Vector& s) {
  if (s.size() != m.g.size()) throw Error(ErrorCode::dimension_mismatch, "model increment");
  const double r = s.norm();
  return m.g.dot(s) + 0.5 * s.dot(m.B * s) + m.sigma / 6.0 * r * r * r;
}

double model_value(const CubicModel& m, const Vector& y) {
  if (y.size() != m.center.size()) throw Error(ErrorCode::dimension_mismatch, "model value");
  return m.f_center + model_increment(m, y - m.center);
}

Vector model_gradient(const CubicModel& m, const Vector& y) {
  if (y.size() != m.center.size()) throw Error(ErrorCode::dimension_mismatch, "model gradient");
  return stationarity_map(m.B, m.g, m.sigma, y - m.center);
}

SubproblemSolution solve_subproblem(const CubicModel& m, const SolveOptions& opts) {
  m.validate();
  SubproblemMethod method = opts.method;
  if (method == SubproblemMethod::automatic) {
    method = m.composite.is_zero() ? SubproblemMethod::spectral : SubproblemMethod::proximal_gradient;
  }
  if ((method == SubproblemMethod::spectral || method == SubproblemMethod::bfgs_armijo) && !m.composite.is_zero()) {
    throw Error(ErrorCode::invalid_argument, "spectral and BFGS subproblem solvers require psi = 0");
  }

  SubproblemSolution sol;
  switch (method) {
    case SubproblemMethod::spectral:
      sol = solve_spectral(m);
      break;
    case SubproblemMethod::bfgs_armijo:
      sol = solve_bfgs(m, opts);
      break;
    case SubproblemMethod::proximal_gradient:
    case SubproblemMethod::automatic:
      sol = solve_proximal(m, opts);
      break;
  }

  if (!sol.model_decrease_ok || !residual_ok(m, sol.r, sol.grad_residual)) {
    throw Error(ErrorCode::subproblem_stalled, "solution failed the acceptance certificate");
  }
  if (opts.require_second_order) {
    const auto hess_psi = m.composite.hessian(sol.x_plus);
    if (!hess_psi) throw Error(ErrorCode::no_hessian_oracle, "second-order check needs the Hessian of psi");
    sol.so_margin = check_second_order(m, sol, *hess_psi);
    const double tol = kSecondOrderTol * (1.0 + m.B.norm());
    if (*sol.so_margin < -tol) {
      throw Error(ErrorCode::subproblem_stalled, "second-order certificate failed");
    }
  }
  return sol;
}

const Vector& induced_subgradient(const CubicModel& /*m*/, const SubproblemSolution& s) { return s.psi_sub; }

double check_second_order(const CubicModel& m, const SubproblemSolution& s, const Matrix& hess_psi) {
  const Eigen::Index n = m.B.rows();
  if (hess_psi.rows() != n || hess_psi.cols() != n) {
    throw Error(ErrorCode::dimension_mismatch, "second-order check");
  }
  const Matrix K = m.B + (m.sigma * s.r) * Matrix::Identity(n, n) + hess_psi;
  const Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

bool satisfies_acceptance(const CubicModel& m, const SubproblemSolution& s) {
  return s.model_decrease_ok && residual_ok(m, s.r, s.grad_residual);
}

}  // namespace lazycnm
