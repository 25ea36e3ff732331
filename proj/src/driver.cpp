#include "lazycnm/driver.hpp"

#include <cmath>
#include <limits>

namespace lazycnm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class Order { first, zeroth };

struct RunState {
  RunReport report;
  bool stop = false;
};

void observe(RunState& st, const TraceRow& row, const DriverConfig& cfg, Order order) {
  RunReport& rep = st.report;
  const StepRecord& s = row.step;
  if (std::isfinite(s.F) && s.F < rep.best_F) {
    rep.best_F = s.F;
    rep.best_point = s.x;
  }
  if (std::isfinite(s.stationarity) && s.stationarity < rep.best_stationarity) {
    rep.best_stationarity = s.stationarity;
  }
  rep.trace.push_back(row);

  if (st.stop) return;
  // Diagnostic stopping tests (uncharged oracles); the first-order
  // stationarity stop lives in the inner loop itself. Delta is available in
  // second-order mode whenever the problem has a Hessian.
  const bool delta_hit = cfg.second_order && s.delta && *s.delta <= cfg.eps;
  const bool zo_hit = cfg.record_trace && order == Order::zeroth && !cfg.second_order &&
                      std::isfinite(s.stationarity) && s.stationarity <= cfg.eps;
  if (delta_hit || zo_hit) {
    st.stop = true;
    rep.final = s.x;
    rep.termination = Termination::solution_found;
    rep.stopped_by_diagnostic = true;
    rep.outer_stationarity.push_back(s.stationarity);
  }
}

void record_inner(RunState& st, const InnerResult& inner, int k, int ell, double sigma, double h,
                  const DriverConfig& cfg, Order order) {
  for (const StepRecord& s : inner.trace) observe(st, TraceRow{k, ell, sigma, h, s}, cfg, order);
}

RunReport run(const ProblemInstance& p, const Vector& x0, const DriverConfig& cfg, Order order) {
  p.validate();
  cfg.validate();
  if (x0.size() != p.dim) throw Error(ErrorCode::dimension_mismatch, "starting point");
  if (order == Order::first && !p.has_gradient()) {
    throw Error(ErrorCode::no_gradient_oracle, "first-order driver needs a gradient oracle");
  }
  if (!std::isfinite(p.composite.value(x0))) throw Error(ErrorCode::invalid_argument, "x0 outside dom psi");

  const BudgetKind kind =
      cfg.budget_kind.value_or(order == Order::first ? BudgetKind::fo_calls : BudgetKind::zo_calls);
  OracleCounter counter(cfg.budget, kind);
  const int n = p.dim;

  RunState st;
  RunReport& rep = st.report;
  rep.x0 = x0;
  rep.final = x0;
  rep.best_point = x0;
  rep.best_F = kInf;
  rep.best_stationarity = kInf;
  rep.F0 = kNaN;

  InnerOptions io;
  io.solve = cfg.solve;
  io.second_order = cfg.second_order;
  io.diagnostic_stationarity = order == Order::zeroth && (cfg.record_trace || cfg.second_order);
  io.diagnostic_delta = cfg.second_order;

  Vector x = x0;
  double tau = cfg.tau0;
  bool done = false;
  try {
    double F = counted_objective(p, counter, x0);
    rep.F0 = F;
    rep.best_F = F;

    for (int k = 0; !done; ++k) {
      rep.tau_history.push_back(tau);
      rep.outer_iters = k + 1;
      for (int ell = 0;; ++ell) {
        if (ell > cfg.ell_max) {
          rep.termination = Termination::ell_overflow;
          rep.final = rep.best_point;
          done = true;
          break;
        }
        const double sigma = fo_sigma_schedule(tau, ell, cfg.m);
        const double tau_eff = std::ldexp(tau, ell);
        Attempt attempt{k, ell, sigma, 0.0, StepStatus::halt, 0, false};
        InnerResult inner;
        io.F0 = F;
        try {
          if (order == Order::first) {
            attempt.h = fo_h_schedule(sigma, tau_eff, cfg.eps, n);
            rep.attempts.push_back(attempt);
            const SymmetricMatrixApprox B = fo_hessian_approx(p, counter, x, attempt.h);
            io.grad0 = B.base_gradient;
            inner = cubic_steps(p, counter, x, B, sigma, cfg.m, cfg.eps, io);
          } else {
            attempt.h = zo_h_schedule(sigma, tau_eff, cfg.eps, n);
            rep.attempts.push_back(attempt);
            const SymmetricMatrixApprox B = zo_hessian_approx(p, counter, x, attempt.h);
            inner = zero_order_cubic_steps(p, counter, x, B, sigma, cfg.m, cfg.eps, io);
          }
        } catch (const InnerInterrupted& e) {
          rep.attempts.back().interrupted = true;
          record_inner(st, e.partial(), k, ell, sigma, attempt.h, cfg, order);
          throw Error(ErrorCode::budget_exhausted, "budget reached inside the inner loop");
        } catch (const Error& e) {
          if (e.code() == ErrorCode::budget_exhausted) rep.attempts.back().interrupted = true;
          throw;
        }
        rep.attempts.back().status = inner.status;
        rep.attempts.back().steps_taken = inner.steps_taken;
        record_inner(st, inner, k, ell, sigma, attempt.h, cfg, order);
        if (st.stop) {
          rep.ell_history.push_back(ell);
          rep.sigma_history.push_back(sigma);
          done = true;
          break;
        }
        if (inner.status == StepStatus::halt) continue;

        rep.ell_history.push_back(ell);
        rep.sigma_history.push_back(sigma);
        const double last_stationarity = inner.trace.empty() ? kNaN : inner.trace.back().stationarity;
        rep.outer_stationarity.push_back(last_stationarity);
        if (inner.status == StepStatus::solution) {
          rep.final = inner.final;
          rep.termination = Termination::solution_found;
          done = true;
          break;
        }
        x = inner.final;
        F = inner.final_F;
        tau = tau_update(tau, cfg.tau0, ell);
        break;
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::budget_exhausted) throw;
    rep.termination = Termination::budget_exhausted;
    rep.final = rep.best_point;
  }
  rep.oracle_totals = counter;
  return rep;
}

}  // namespace

void DriverConfig::validate() const {
  if (!(tau0 > 0.0) || !std::isfinite(tau0)) throw Error(ErrorCode::invalid_argument, "tau0 must be positive");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw Error(ErrorCode::invalid_argument, "eps must be positive");
  if (m < 1) throw Error(ErrorCode::invalid_argument, "m must be >= 1");
  if (ell_max < 1) throw Error(ErrorCode::invalid_argument, "ell_max must be >= 1");
  if (budget && *budget < 1) throw Error(ErrorCode::invalid_argument, "budget must be >= 1");
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::solution_found: return "solution_found";
    case Termination::budget_exhausted: return "budget_exhausted";
    case Termination::ell_overflow: return "ell_overflow";
  }
  return "unknown";
}

double fo_sigma_schedule(double tau, int ell, int m) {
  return 16.0 * std::cbrt(2.0 / 3.0) * std::ldexp(tau, ell) * m;
}

double fo_h_schedule(double sigma, double tau_eff, double eps, int n) {
  const double nn = static_cast<double>(n);
  return std::cbrt(3.0 * std::pow(sigma * eps, 1.5) / (128.0 * 192.0 * std::pow(nn, 1.5) * tau_eff * tau_eff * tau_eff));
}

double zo_h_schedule(double sigma, double tau_eff, double eps, int n) {
  const double nn = static_cast<double>(n);
  return std::cbrt(81.0 * std::pow(sigma * eps, 1.5) / (16384.0 * 192.0 * nn * nn * nn * tau_eff * tau_eff * tau_eff));
}

double tau_update(double tau_k, double tau0, int ell_k) { return std::max(tau0, std::ldexp(tau_k, ell_k - 1)); }

RunReport first_order_cnm(const ProblemInstance& p, const Vector& x0, const DriverConfig& cfg) {
  return run(p, x0, cfg, Order::first);
}

RunReport zero_order_cnm(const ProblemInstance& p, const Vector& x0, const DriverConfig& cfg) {
  return run(p, x0, cfg, Order::zeroth);
}

}  // namespace lazycnm
