#pragma once

// Adaptive outer loops: for each outer iteration k, try l = 0, 1, 2, ...
// with sigma and the finite-difference interval scheduled from 2^l tau_k
// until the lazy inner loop makes enough progress, then update tau.

#include <optional>
#include <vector>

#include "lazycnm/lazy_steps.hpp"

namespace lazycnm {

struct DriverConfig {
  double tau0 = 1.0;
  double eps = 1e-4;
  int m = 1;
  std::optional<std::int64_t> budget = 3000;
  /// Defaults to fo_calls for the first-order driver, zo_calls for the
  /// zeroth-order one.
  std::optional<BudgetKind> budget_kind;
  int ell_max = 60;
  bool second_order = false;
  /// Zeroth-order runs: turns on the uncharged true-stationarity check,
  /// which stops the run below eps.
  /// Second-order runs always compute Delta_t when a Hessian exists and stop
  /// once it drops below eps.
  bool record_trace = false;
  SolveOptions solve;

  void validate() const;
};

enum class Termination { solution_found, budget_exhausted, ell_overflow };

const char* to_string(Termination t);

struct TraceRow {
  int k = 0;
  int ell = 0;
  double sigma = 0.0;
  double h = 0.0;
  StepRecord step;
};

struct Attempt {
  int k = 0;
  int ell = 0;
  double sigma = 0.0;
  double h = 0.0;
  StepStatus status = StepStatus::halt;
  int steps_taken = 0;
  bool interrupted = false;
};

struct RunReport {
  Vector x0;
  double F0 = 0.0;
  Vector final;
  int outer_iters = 0;  // outer iterations started
  Termination termination = Termination::budget_exhausted;
  std::vector<double> tau_history;  // tau_k at the start of each outer iteration
  std::vector<int> ell_history;     // ell_k of each completed outer iteration
  std::vector<double> sigma_history;  // accepted sigma_{k, ell_k}
  /// Stationarity at x_1, x_2, ... (the last point of each successful inner
  /// loop) and at the final point of a solution; NaN when not measured.
  std::vector<double> outer_stationarity;
  OracleCounter oracle_totals;
  double best_stationarity = 0.0;
  double best_F = 0.0;
  Vector best_point;
  /// The run stopped on an uncharged check (Delta_t in second-order mode,
  /// true stationarity in zeroth-order mode) rather than on its own oracle
  /// information.
  bool stopped_by_diagnostic = false;
  std::vector<Attempt> attempts;
  std::vector<TraceRow> trace;
};

/// 2^4 (2/3)^{1/3} 2^ell tau m
double fo_sigma_schedule(double tau, int ell, int m);
/// [3 sigma^{3/2} eps^{3/2} / (2^7 192 n^{3/2} tau_eff^3)]^{1/3}
double fo_h_schedule(double sigma, double tau_eff, double eps, int n);
/// [3^4 sigma^{3/2} eps^{3/2} / (2^14 192 n^3 tau_eff^3)]^{1/3}
double zo_h_schedule(double sigma, double tau_eff, double eps, int n);
/// max{tau0, 2^{ell_k - 1} tau_k}
double tau_update(double tau_k, double tau0, int ell_k);

RunReport first_order_cnm(const ProblemInstance& p, const Vector& x0, const DriverConfig& cfg);
RunReport zero_order_cnm(const ProblemInstance& p, const Vector& x0, const DriverConfig& cfg);

}  // namespace lazycnm
