// lazycnm: single solves and benchmark sweeps from the command line.
//
//   lazycnm solve --method fo --problem rosenbrock --m 2
//   lazycnm bench --methods fo,zo --m 1,n,2n --out results --jobs 4
//
// Exit status: 0 ok, 2 configuration error, 3 runtime error.

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lazycnm/bench.hpp"
#include "lazycnm/test_problems.hpp"

namespace {

using namespace lazycnm;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Common {
  double tau0 = 1.0;
  double eps = 1e-4;
  std::int64_t budget = 3000;
  std::uint64_t seed = 0;
  bool second_order = false;
  bool trace = false;
  std::string subproblem = "auto";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--tau0", c.tau0, "initial regularization estimate")->capture_default_str();
  cmd->add_option("--eps", c.eps, "target stationarity")->capture_default_str();
  cmd->add_option("--budget", c.budget, "oracle call budget")->capture_default_str();
  cmd->add_option("--seed", c.seed, "seed for synthetic problems")->capture_default_str();
  cmd->add_flag("--second-order", c.second_order, "require the second-order subproblem certificate");
  cmd->add_flag("--trace", c.trace, "print the step trace; zeroth-order runs also stop on true stationarity");
  cmd->add_option("--subproblem", c.subproblem, "auto|spectral|bfgs|prox")
      ->check(CLI::IsMember({"auto", "spectral", "bfgs", "prox"}))
      ->capture_default_str();
}

SolveOptions solve_options(const std::string& name) {
  SolveOptions o;
  if (name == "spectral") o.method = SubproblemMethod::spectral;
  if (name == "bfgs") o.method = SubproblemMethod::bfgs_armijo;
  if (name == "prox") o.method = SubproblemMethod::proximal_gradient;
  return o;
}

std::string join(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
  return s;
}

int run_solve(const Common& c, const std::string& method_name, const std::string& problem, const std::string& m_text) {
  const Method method = parse_method(method_name);
  const CatalogEntry entry = find_problem(problem, c.seed);
  const MChoice mc = MChoice::parse(m_text);

  DriverConfig cfg;
  cfg.tau0 = c.tau0;
  cfg.eps = c.eps;
  cfg.budget = c.budget;
  cfg.m = mc.resolve(entry.dim);
  cfg.second_order = c.second_order;
  cfg.record_trace = c.trace;
  cfg.solve = solve_options(c.subproblem);
  cfg.validate();

  const ProblemInstance p = entry.make();
  const RunReport r = method == Method::fo ? first_order_cnm(p, entry.standard_start, cfg)
                                           : zero_order_cnm(p, entry.standard_start, cfg);

  std::cout << "problem\t" << entry.name << "\nmethod\t" << to_string(method) << "\nn\t" << entry.dim << "\nm\t"
            << cfg.m << "\ntermination\t" << to_string(r.termination) << "\nouter_iters\t" << r.outer_iters
            << "\nF0\t" << format_double(r.F0) << "\nbest_F\t" << format_double(r.best_F) << "\nf_evals\t"
            << r.oracle_totals.f_evals() << "\ngrad_evals\t" << r.oracle_totals.grad_evals() << "\nbudget_tally\t"
            << r.oracle_totals.tally() << '\n';
  if (!r.outer_stationarity.empty()) {
    std::cout << "final_stationarity\t" << format_double(r.outer_stationarity.back()) << '\n';
  }
  if (r.stopped_by_diagnostic) std::cout << "stopped_by_diagnostic\t1\n";
  std::cout << "x_final\t" << join(r.final) << '\n';
  std::string taus;
  for (double t : r.tau_history) taus += (taus.empty() ? "" : " ") + format_double(t);
  std::cout << "tau_history\t" << taus << '\n';
  if (p.has_hessian()) std::cout << "xi_final\t" << format_double(xi_measure(p, r.final)) << '\n';

  if (c.trace) {
    std::cout << "\nk,ell,t,sigma,h,f_evals,grad_evals,F,grad_residual,stationarity\n";
    for (const TraceRow& row : r.trace) {
      const StepRecord& s = row.step;
      std::cout << row.k << ',' << row.ell << ',' << s.t << ',' << format_double(row.sigma) << ','
                << format_double(row.h) << ',' << s.f_evals << ',' << s.grad_evals << ',' << format_double(s.F)
                << ',' << format_double(s.grad_residual) << ',' << format_double(s.stationarity) << '\n';
    }
  }
  return 0;
}

int run_bench(const Common& c, const std::vector<std::string>& methods, const std::vector<std::string>& problems,
              const std::vector<std::string>& ms, const std::string& out, int jobs) {
  BenchmarkSpec spec;
  spec.methods.clear();
  for (const std::string& m : methods) spec.methods.push_back(parse_method(m));
  spec.m_choices.clear();
  for (const std::string& m : ms) spec.m_choices.push_back(MChoice::parse(m));
  spec.problems = problems;
  spec.tau0 = c.tau0;
  spec.eps = c.eps;
  spec.budget = c.budget;
  spec.seed = c.seed;
  spec.output_dir = out;
  spec.jobs = jobs;
  spec.second_order = c.second_order;
  spec.record_trace = c.trace;
  spec.solve = solve_options(c.subproblem);
  spec.validate();

  const BenchmarkOutcome res = run_benchmark(spec);
  int solved = 0;
  for (const RunSummary& r : res.runs) solved += r.success ? 1 : 0;
  std::cout << res.runs.size() << " runs, " << solved << " successful; results in " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cubic Newton with lazy finite-difference Hessians"};
  app.require_subcommand(1);

  Common solve_common;
  std::string solve_method = "fo";
  std::string solve_problem = "rosenbrock";
  std::string solve_m = "n";
  CLI::App* solve = app.add_subcommand("solve", "run one problem and print the report");
  solve->add_option("--method", solve_method, "fo|zo")->capture_default_str();
  solve->add_option("-p,--problem", solve_problem, "problem name")->capture_default_str();
  solve->add_option("--m", solve_m, "lazy steps per Hessian: integer, n or 2n")->capture_default_str();
  add_common(solve, solve_common);

  Common bench_common;
  std::vector<std::string> bench_methods{"fo"};
  std::vector<std::string> bench_problems{"all"};
  std::vector<std::string> bench_m{"1", "n", "2n"};
  std::string bench_out = "results";
  int bench_jobs = 1;
  CLI::App* bench = app.add_subcommand("bench", "sweep methods and m over problems, write tables");
  bench->add_option("--method,--methods", bench_methods, "comma list of fo, zo")->delimiter(',');
  bench->add_option("-p,--problem,--problems", bench_problems, "comma list of names, or all")->delimiter(',');
  bench->add_option("--m", bench_m, "comma list of integers, n, 2n")->delimiter(',');
  bench->add_option("--out", bench_out, "output directory")->capture_default_str();
  bench->add_option("--jobs", bench_jobs, "worker threads")->capture_default_str();
  add_common(bench, bench_common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*solve) return run_solve(solve_common, solve_method, solve_problem, solve_m);
    return run_bench(bench_common, bench_methods, bench_problems, bench_m, bench_out, bench_jobs);
  } catch (const Error& e) {
    std::cerr << "lazycnm: " << e.what() << '\n';
    const bool config = e.code() == ErrorCode::unknown_problem || e.code() == ErrorCode::invalid_argument ||
                        e.code() == ErrorCode::dimension_mismatch;
    return config ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "lazycnm: " << e.what() << '\n';
    return kExitRuntime;
  }
}
