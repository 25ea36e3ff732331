#pragma once

// Method x m sweeps over named problems, success metrics, Dolan-More
// performance profiles and the TSV/CSV artifacts written for them.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lazycnm/driver.hpp"

namespace lazycnm {

enum class Method { fo, zo };

const char* to_string(Method m);
Method parse_method(const std::string& s);  // throws invalid_argument

/// One entry of an m schedule: a fixed integer, n, or 2n.
struct MChoice {
  enum class Kind { fixed, n, two_n };
  Kind kind = Kind::fixed;
  int k = 1;

  int resolve(int n) const;
  std::string label() const;  // "1", "7", "n", "2n"
  static MChoice parse(const std::string& s);  // throws invalid_argument
};

struct BenchmarkSpec {
  std::vector<Method> methods{Method::fo};
  std::vector<MChoice> m_choices{MChoice{}, MChoice{MChoice::Kind::n, 0}, MChoice{MChoice::Kind::two_n, 0}};
  std::vector<std::string> problems{"all"};
  double tau0 = 1.0;
  double eps = 1e-4;
  std::int64_t budget = 3000;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "results";
  int jobs = 1;
  bool second_order = false;
  bool record_trace = false;
  SolveOptions solve;

  void validate() const;
  /// Problem names with "all" expanded to the catalog, in order.
  std::vector<std::string> resolved_problems() const;
};

/// Variant name used in tables and file names, e.g. "fo_m2n".
std::string variant_name(Method method, const MChoice& m);

struct RunSummary {
  std::string problem;
  Method method = Method::fo;
  std::string m_label;
  int m = 1;
  std::string variant;
  bool success = false;
  /// Oracle count at the success event (fo_calls or zo_calls).
  std::optional<std::int64_t> metric;
  /// Trace row at which success was declared.
  std::optional<std::size_t> success_row;
  double best_F = 0.0;
  std::string termination;  // a Termination, or an error code if the run threw
  RunReport report;
};

using CountMap = std::map<std::pair<std::string, std::string>, std::optional<std::int64_t>>;

struct ProfileTable {
  std::vector<std::string> problems;  // problems with at least one finisher
  std::vector<std::string> variants;
  std::vector<std::string> excluded;  // problems nobody finished
  /// counts[p][v], nullopt for DNF.
  std::vector<std::vector<std::optional<std::int64_t>>> counts;
  /// ratios[p][v] = count / min count over finishers; +inf for DNF.
  std::vector<std::vector<double>> ratios;
  std::vector<double> grid;  // 0, 0.05, ..., 10
  /// curves[v][i] = fraction of problems with log2(ratio) <= grid[i].
  std::vector<std::vector<double>> curves;
};

/// The x grid 0:0.05:10 (201 points).
std::vector<double> profile_grid();

/// Throws empty_input when `counts` is empty.
ProfileTable performance_profile(const CountMap& counts);

struct BenchmarkOutcome {
  std::vector<RunSummary> runs;  // ordered by problem, then variant
  std::optional<ProfileTable> fo_profile;
  std::optional<ProfileTable> zo_profile;
};

/// Runs every (problem, variant) pair, derives success metrics and writes
/// traces/<problem>__<variant>.csv, summary.tsv, profile_<method>.tsv and
/// config.tsv under spec.output_dir. Throws unknown_problem, io_error.
BenchmarkOutcome run_benchmark(const BenchmarkSpec& spec);

/// Shortest round-trip decimal form; "nan", "inf", "-inf" otherwise.
std::string format_double(double v);

}  // namespace lazycnm
