#include "lazycnm/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "lazycnm/test_problems.hpp"

namespace lazycnm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Task {
  std::string problem;
  Method method;
  MChoice m;
};

RunSummary run_one(const BenchmarkSpec& spec, const Task& task) {
  const CatalogEntry entry = find_problem(task.problem, spec.seed);
  RunSummary out;
  out.problem = task.problem;
  out.method = task.method;
  out.m_label = task.m.label();
  out.m = task.m.resolve(entry.dim);
  out.variant = variant_name(task.method, task.m);
  out.best_F = kNaN;

  DriverConfig cfg;
  cfg.tau0 = spec.tau0;
  cfg.eps = spec.eps;
  cfg.m = out.m;
  cfg.budget = spec.budget;
  cfg.second_order = spec.second_order;
  cfg.record_trace = spec.record_trace;
  cfg.solve = spec.solve;
  try {
    const ProblemInstance p = entry.make();
    out.report = task.method == Method::fo ? first_order_cnm(p, entry.standard_start, cfg)
                                           : zero_order_cnm(p, entry.standard_start, cfg);
    out.best_F = out.report.best_F;
    out.termination = to_string(out.report.termination);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::unknown_problem || e.code() == ErrorCode::invalid_argument) throw;
    out.termination = to_string(e.code());
  }
  return out;
}

void mark_fo_success(RunSummary& r, double eps) {
  const auto& trace = r.report.trace;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const StepRecord& s = trace[i].step;
    if (std::isfinite(s.stationarity) && s.stationarity <= eps) {
      r.success = true;
      r.success_row = i;
      r.metric = s.f_evals + s.grad_evals;
      return;
    }
  }
}

// f(x) - f_best <= eps (f(x0) - f_best), first trace row that satisfies it.
void mark_zo_success(RunSummary& r, double eps, double f_best) {
  if (!std::isfinite(f_best) || !std::isfinite(r.report.F0)) return;
  const double target = eps * (r.report.F0 - f_best);
  const auto& trace = r.report.trace;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const StepRecord& s = trace[i].step;
    if (std::isfinite(s.F) && s.F - f_best <= target) {
      r.success = true;
      r.success_row = i;
      r.metric = s.f_evals;
      return;
    }
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  return os;
}

void close_out(std::ofstream& os, const std::filesystem::path& path) {
  os.close();
  if (!os) throw Error(ErrorCode::io_error, "write failed: " + path.string());
}

void write_trace(const std::filesystem::path& path, const RunSummary& r) {
  std::ofstream os = open_out(path);
  os << "k,ell,t,sigma,h,f_evals,grad_evals,F,grad_residual,stationarity\n";
  for (const TraceRow& row : r.report.trace) {
    const StepRecord& s = row.step;
    os << row.k << ',' << row.ell << ',' << s.t << ',' << format_double(row.sigma) << ',' << format_double(row.h)
       << ',' << s.f_evals << ',' << s.grad_evals << ',' << format_double(s.F) << ','
       << format_double(s.grad_residual) << ',' << format_double(s.stationarity) << '\n';
  }
  close_out(os, path);
}

void write_summary(const std::filesystem::path& path, const std::vector<RunSummary>& runs) {
  std::ofstream os = open_out(path);
  os << "problem\tmethod\tm\tsuccess\tmetric\tbest_F\ttermination\n";
  for (const RunSummary& r : runs) {
    os << r.problem << '\t' << to_string(r.method) << '\t' << r.m_label << '\t' << (r.success ? 1 : 0) << '\t'
       << (r.metric ? std::to_string(*r.metric) : std::string("NA")) << '\t' << format_double(r.best_F) << '\t'
       << r.termination << '\n';
  }
  close_out(os, path);
}

void write_profile(const std::filesystem::path& path, const ProfileTable& t) {
  std::ofstream os = open_out(path);
  os << 'x';
  for (const std::string& v : t.variants) os << "\tcurve_" << v;
  os << '\n';
  for (std::size_t i = 0; i < t.grid.size(); ++i) {
    os << format_double(t.grid[i]);
    for (const auto& curve : t.curves) os << '\t' << format_double(curve[i]);
    os << '\n';
  }
  os << "# excluded\t" << t.excluded.size() << '\t';
  for (std::size_t i = 0; i < t.excluded.size(); ++i) os << (i ? "," : "") << t.excluded[i];
  os << '\n';
  close_out(os, path);
}

void write_config(const std::filesystem::path& path, const BenchmarkSpec& spec) {
  std::ofstream os = open_out(path);
  auto join = [](const auto& items, auto fn) {
    std::string s;
    for (const auto& it : items) s += (s.empty() ? "" : ",") + fn(it);
    return s;
  };
  os << "methods\t" << join(spec.methods, [](Method m) { return std::string(to_string(m)); }) << '\n';
  os << "m\t" << join(spec.m_choices, [](const MChoice& m) { return m.label(); }) << '\n';
  os << "problems\t" << join(spec.resolved_problems(), [](const std::string& s) { return s; }) << '\n';
  os << "tau0\t" << format_double(spec.tau0) << '\n';
  os << "eps\t" << format_double(spec.eps) << '\n';
  os << "budget\t" << spec.budget << '\n';
  os << "seed\t" << spec.seed << '\n';
  os << "second_order\t" << (spec.second_order ? 1 : 0) << '\n';
  os << "trace_diagnostics\t" << (spec.record_trace ? 1 : 0) << '\n';
  const char* method = "automatic";
  switch (spec.solve.method) {
    case SubproblemMethod::automatic: method = "automatic"; break;
    case SubproblemMethod::spectral: method = "spectral"; break;
    case SubproblemMethod::bfgs_armijo: method = "bfgs_armijo"; break;
    case SubproblemMethod::proximal_gradient: method = "proximal_gradient"; break;
  }
  os << "subproblem\t" << method << '\n';
  os << "subproblem_max_iters\t" << spec.solve.max_inner_iters << '\n';
  os << "armijo_c1\t" << format_double(spec.solve.armijo_c1) << '\n';
  os << "armijo_backtrack\t" << format_double(spec.solve.backtrack) << '\n';
  close_out(os, path);
}

}  // namespace

const char* to_string(Method m) { return m == Method::fo ? "fo" : "zo"; }

Method parse_method(const std::string& s) {
  if (s == "fo") return Method::fo;
  if (s == "zo") return Method::zo;
  throw Error(ErrorCode::invalid_argument, "unknown method '" + s + "' (expected fo or zo)");
}

int MChoice::resolve(int n) const {
  switch (kind) {
    case Kind::n: return n;
    case Kind::two_n: return 2 * n;
    case Kind::fixed: break;
  }
  return k;
}

std::string MChoice::label() const {
  switch (kind) {
    case Kind::n: return "n";
    case Kind::two_n: return "2n";
    case Kind::fixed: break;
  }
  return std::to_string(k);
}

MChoice MChoice::parse(const std::string& s) {
  if (s == "n") return MChoice{Kind::n, 0};
  if (s == "2n") return MChoice{Kind::two_n, 0};
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 1) {
    throw Error(ErrorCode::invalid_argument, "bad m value '" + s + "' (expected a positive integer, n or 2n)");
  }
  return MChoice{Kind::fixed, v};
}

std::string variant_name(Method method, const MChoice& m) { return std::string(to_string(method)) + "_m" + m.label(); }

void BenchmarkSpec::validate() const {
  if (methods.empty()) throw Error(ErrorCode::invalid_argument, "no methods");
  if (m_choices.empty()) throw Error(ErrorCode::invalid_argument, "no m choices");
  if (problems.empty()) throw Error(ErrorCode::invalid_argument, "no problems");
  if (budget < 1) throw Error(ErrorCode::invalid_argument, "budget must be >= 1");
  if (jobs < 1) throw Error(ErrorCode::invalid_argument, "jobs must be >= 1");
  if (!(tau0 > 0.0) || !(eps > 0.0)) throw Error(ErrorCode::invalid_argument, "tau0 and eps must be positive");
  for (const std::string& name : resolved_problems()) find_problem(name, seed);
}

std::vector<std::string> BenchmarkSpec::resolved_problems() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto add = [&](const std::string& s) {
    if (seen.insert(s).second) out.push_back(s);
  };
  for (const std::string& p : problems) {
    if (p == "all") {
      for (const CatalogEntry& e : catalog()) add(e.name);
    } else {
      add(p);
    }
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<double> profile_grid() {
  std::vector<double> g(201);
  for (int i = 0; i <= 200; ++i) g[i] = i / 20.0;
  return g;
}

ProfileTable performance_profile(const CountMap& counts) {
  if (counts.empty()) throw Error(ErrorCode::empty_input, "no counts to profile");
  std::vector<std::string> problems;
  std::vector<std::string> variants;
  {
    std::set<std::string> ps, vs;
    for (const auto& [key, _] : counts) {
      if (ps.insert(key.first).second) problems.push_back(key.first);
      vs.insert(key.second);
    }
    variants.assign(vs.begin(), vs.end());
  }

  ProfileTable t;
  t.variants = variants;
  t.grid = profile_grid();
  for (const std::string& p : problems) {
    std::vector<std::optional<std::int64_t>> row;
    std::optional<std::int64_t> best;
    for (const std::string& v : variants) {
      const auto it = counts.find({p, v});
      const std::optional<std::int64_t> c = it == counts.end() ? std::nullopt : it->second;
      row.push_back(c);
      if (c && (!best || *c < *best)) best = c;
    }
    if (!best) {
      t.excluded.push_back(p);
      continue;
    }
    std::vector<double> ratios;
    for (const auto& c : row) {
      if (!c) {
        ratios.push_back(kInf);
      } else if (*best == 0) {
        ratios.push_back(*c == 0 ? 1.0 : kInf);
      } else {
        ratios.push_back(static_cast<double>(*c) / static_cast<double>(*best));
      }
    }
    t.problems.push_back(p);
    t.counts.push_back(std::move(row));
    t.ratios.push_back(std::move(ratios));
  }

  const double np = static_cast<double>(t.problems.size());
  t.curves.assign(variants.size(), std::vector<double>(t.grid.size(), 0.0));
  for (std::size_t v = 0; v < variants.size(); ++v) {
    for (std::size_t i = 0; i < t.grid.size(); ++i) {
      int hits = 0;
      for (const auto& ratios : t.ratios)
        if (std::isfinite(ratios[v]) && std::log2(ratios[v]) <= t.grid[i]) ++hits;
      t.curves[v][i] = np > 0 ? hits / np : 0.0;
    }
  }
  return t;
}

BenchmarkOutcome run_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  std::vector<Task> tasks;
  for (const std::string& p : spec.resolved_problems())
    for (Method method : spec.methods)
      for (const MChoice& m : spec.m_choices) tasks.push_back(Task{p, method, m});

  std::vector<RunSummary> runs(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        runs[i] = run_one(spec, tasks[i]);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int nthreads = std::min<int>(spec.jobs, static_cast<int>(tasks.size()));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < nthreads; ++j) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  // f_best per problem over every zeroth-order variant in this spec
  std::map<std::string, double> zo_best;
  for (const RunSummary& r : runs) {
    if (r.method != Method::zo || !std::isfinite(r.best_F)) continue;
    auto [it, inserted] = zo_best.try_emplace(r.problem, r.best_F);
    if (!inserted) it->second = std::min(it->second, r.best_F);
  }
  for (RunSummary& r : runs) {
    if (r.method == Method::fo) {
      mark_fo_success(r, spec.eps);
    } else if (const auto it = zo_best.find(r.problem); it != zo_best.end()) {
      mark_zo_success(r, spec.eps, it->second);
    }
  }

  BenchmarkOutcome out;
  for (Method method : {Method::fo, Method::zo}) {
    if (std::find(spec.methods.begin(), spec.methods.end(), method) == spec.methods.end()) continue;
    CountMap counts;
    for (const RunSummary& r : runs)
      if (r.method == method) counts[{r.problem, r.variant}] = r.metric;
    (method == Method::fo ? out.fo_profile : out.zo_profile) = performance_profile(counts);
  }

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(spec.output_dir / "traces", ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + (spec.output_dir / "traces").string());
  for (const RunSummary& r : runs) write_trace(spec.output_dir / "traces" / (r.problem + "__" + r.variant + ".csv"), r);
  write_summary(spec.output_dir / "summary.tsv", runs);
  if (out.fo_profile) write_profile(spec.output_dir / "profile_fo.tsv", *out.fo_profile);
  if (out.zo_profile) write_profile(spec.output_dir / "profile_zo.tsv", *out.zo_profile);
  write_config(spec.output_dir / "config.tsv", spec);

  out.runs = std::move(runs);
  return out;
}

}  // namespace lazycnm
