#include "lazycnm/problem.hpp"

#include <algorithm>
#include <cmath>

namespace lazycnm {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::budget_exhausted: return "budget_exhausted";
    case ErrorCode::nonfinite_value: return "nonfinite_value";
    case ErrorCode::no_gradient_oracle: return "no_gradient_oracle";
    case ErrorCode::no_hessian_oracle: return "no_hessian_oracle";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::subproblem_stalled: return "subproblem_stalled";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::unknown_problem: return "unknown_problem";
    case ErrorCode::empty_input: return "empty_input";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

CompositeDescriptor CompositeDescriptor::zero() { return {}; }

CompositeDescriptor CompositeDescriptor::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size()) {
    throw Error(ErrorCode::dimension_mismatch, "box bounds have different sizes");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i]) {
      throw Error(ErrorCode::invalid_argument, "box bounds must satisfy lower <= upper");
    }
  }
  CompositeDescriptor d;
  d.kind_ = Kind::box_indicator;
  d.lower_ = std::move(lower);
  d.upper_ = std::move(upper);
  return d;
}

CompositeDescriptor CompositeDescriptor::l1(double weight) {
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw Error(ErrorCode::invalid_argument, "l1 weight must be finite and nonnegative");
  }
  CompositeDescriptor d;
  d.kind_ = Kind::l1;
  d.weight_ = weight;
  return d;
}

CompositeDescriptor CompositeDescriptor::custom(ValueFn value, ProxFn prox, HessianFn hessian) {
  if (!value) throw Error(ErrorCode::invalid_argument, "custom composite needs a value map");
  CompositeDescriptor d;
  d.kind_ = Kind::custom;
  d.value_ = std::move(value);
  d.prox_ = std::move(prox);
  d.hessian_ = std::move(hessian);
  return d;
}

double CompositeDescriptor::value(const Vector& x) const {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::box_indicator:
      if (x.size() != lower_.size()) throw Error(ErrorCode::dimension_mismatch, "box composite");
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] < lower_[i] || x[i] > upper_[i]) return kInf;
      }
      return 0.0;
    case Kind::l1:
      return weight_ * x.lpNorm<1>();
    case Kind::custom:
      return value_(x);
  }
  return 0.0;
}

Vector CompositeDescriptor::prox(const Vector& v, double step) const {
  switch (kind_) {
    case Kind::zero:
      return v;
    case Kind::box_indicator:
      return v.cwiseMax(lower_).cwiseMin(upper_);
    case Kind::l1: {
      Vector out(v.size());
      for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = soft_threshold(v[i], step * weight_);
      return out;
    }
    case Kind::custom:
      if (!prox_) throw Error(ErrorCode::invalid_argument, "custom composite has no prox operator");
      return prox_(v, step);
  }
  return v;
}

std::optional<Matrix> CompositeDescriptor::hessian(const Vector& x) const {
  if (kind_ == Kind::custom) {
    if (!hessian_) return std::nullopt;
    return hessian_(x);
  }
  return Matrix::Zero(x.size(), x.size());
}

std::optional<Vector> CompositeDescriptor::min_norm_subgradient(const Vector& x, const Vector& grad) const {
  if (x.size() != grad.size()) throw Error(ErrorCode::dimension_mismatch, "subgradient");
  const Eigen::Index n = x.size();
  switch (kind_) {
    case Kind::zero:
      return Vector::Zero(n);
    case Kind::box_indicator: {
      // Normal cone: nonpositive at an active lower bound, nonnegative at an
      // active upper bound, both when the interval is degenerate.
      Vector sub = Vector::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const bool at_lo = x[i] <= lower_[i];
        const bool at_hi = x[i] >= upper_[i];
        if (at_lo && at_hi) {
          sub[i] = -grad[i];
        } else if (at_lo) {
          sub[i] = std::min(0.0, -grad[i]);
        } else if (at_hi) {
          sub[i] = std::max(0.0, -grad[i]);
        }
      }
      return sub;
    }
    case Kind::l1: {
      Vector sub(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (x[i] > 0.0) {
          sub[i] = weight_;
        } else if (x[i] < 0.0) {
          sub[i] = -weight_;
        } else {
          sub[i] = std::clamp(-grad[i], -weight_, weight_);
        }
      }
      return sub;
    }
    case Kind::custom:
      return std::nullopt;
  }
  return std::nullopt;
}

void ProblemInstance::validate() const {
  if (dim < 1) throw Error(ErrorCode::invalid_argument, "problem dimension must be >= 1");
  if (!smooth_value) throw Error(ErrorCode::invalid_argument, "problem has no value oracle");
}

std::int64_t OracleCounter::remaining() const noexcept {
  if (!budget_) return std::numeric_limits<std::int64_t>::max();
  return std::max<std::int64_t>(0, *budget_ - tally());
}

void OracleCounter::charge_value() {
  if (exhausted()) throw Error(ErrorCode::budget_exhausted, "function-value budget reached");
  ++f_evals_;
}

void OracleCounter::charge_gradient() {
  if (kind_ == BudgetKind::fo_calls && exhausted()) {
    throw Error(ErrorCode::budget_exhausted, "first-order budget reached");
  }
  ++grad_evals_;
}

namespace {

void require_point(const ProblemInstance& p, const Vector& x) {
  if (x.size() != p.dim) throw Error(ErrorCode::dimension_mismatch, "query point has wrong dimension");
  if (!x.allFinite()) throw Error(ErrorCode::nonfinite_value, "query point is not finite");
}

}  // namespace

double counted_value(const ProblemInstance& p, OracleCounter& c, const Vector& x) {
  require_point(p, x);
  c.charge_value();
  const double v = p.smooth_value(x);
  if (!std::isfinite(v)) throw Error(ErrorCode::nonfinite_value, "f(x) is not finite");
  return v;
}

Vector counted_gradient(const ProblemInstance& p, OracleCounter& c, const Vector& x) {
  if (!p.has_gradient()) throw Error(ErrorCode::no_gradient_oracle, "problem has no gradient oracle");
  require_point(p, x);
  c.charge_gradient();
  Vector g = p.smooth_gradient(x);
  if (g.size() != p.dim) throw Error(ErrorCode::dimension_mismatch, "gradient oracle returned wrong size");
  if (!g.allFinite()) throw Error(ErrorCode::nonfinite_value, "gradient is not finite");
  return g;
}

Vector diagnostic_gradient(const ProblemInstance& p, OracleCounter& c, const Vector& x) {
  if (!p.has_gradient()) throw Error(ErrorCode::no_gradient_oracle, "problem has no gradient oracle");
  require_point(p, x);
  c.charge_unbudgeted_gradient();
  return p.smooth_gradient(x);
}

Matrix counted_hessian(const ProblemInstance& p, OracleCounter& c, const Vector& x) {
  if (!p.has_hessian()) throw Error(ErrorCode::no_hessian_oracle, "problem has no Hessian oracle");
  require_point(p, x);
  c.charge_hessian();
  return p.smooth_hessian(x);
}

double stationarity_residual(const ProblemInstance& p, const Vector& grad, const Vector& psi_sub) {
  if (grad.size() != p.dim || psi_sub.size() != p.dim) {
    throw Error(ErrorCode::dimension_mismatch, "stationarity residual");
  }
  return (grad + psi_sub).norm();
}

double counted_objective(const ProblemInstance& p, OracleCounter& c, const Vector& x) {
  const double psi = p.composite.value(x);
  return counted_value(p, c, x) + psi;
}

}  // namespace lazycnm
