#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "lazycnm/bench.hpp"

using namespace lazycnm;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::vector<std::string>> read_table(const fs::path& path, char sep) {
  std::ifstream in(path);
  REQUIRE(in);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, sep)) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lazycnm_bench_test_" + name);
  fs::remove_all(dir);
  return dir;
}

CountMap two_variant(std::optional<std::int64_t> a, std::optional<std::int64_t> b, const std::string& problem = "p") {
  CountMap c;
  c[{problem, "A"}] = a;
  c[{problem, "B"}] = b;
  return c;
}

BenchmarkSpec small_spec(const fs::path& out, int jobs) {
  BenchmarkSpec s;
  s.methods = {Method::fo, Method::zo};
  s.m_choices = {MChoice{}, MChoice{MChoice::Kind::n, 0}};
  s.problems = {"rosenbrock", "beale", "helical_valley"};
  s.budget = 400;
  s.output_dir = out;
  s.jobs = jobs;
  return s;
}

}  // namespace

TEST_CASE("profile grid") {
  const auto g = profile_grid();
  REQUIRE(g.size() == 201);
  CHECK(g.front() == 0.0);
  CHECK(g[1] == 0.05);
  CHECK(g.back() == 10.0);
}

TEST_CASE("performance profile examples") {
  SUBCASE("counts 100 and 200") {
    const ProfileTable t = performance_profile(two_variant(100, 200));
    REQUIRE(t.variants == std::vector<std::string>{"A", "B"});
    CHECK(t.ratios[0][0] == 1.0);
    CHECK(t.ratios[0][1] == 2.0);
    CHECK(t.curves[0][0] == 1.0);
    CHECK(t.curves[1][0] == 0.0);
    CHECK(t.curves[1][19] == 0.0);  // x = 0.95
    CHECK(t.curves[1][20] == 1.0);  // x = 1
  }
  SUBCASE("ties give constant one") {
    const ProfileTable t = performance_profile(two_variant(70, 70));
    for (const auto& c : t.curves)
      for (double v : c) CHECK(v == 1.0);
  }
  SUBCASE("a DNF never reaches one") {
    const ProfileTable t = performance_profile(two_variant(5, std::nullopt));
    CHECK(t.ratios[0][1] == kInf);
    for (double v : t.curves[1]) CHECK(v == 0.0);
  }
  SUBCASE("problems nobody finishes are excluded") {
    CountMap c = two_variant(10, 30, "p");
    const CountMap q = two_variant(std::nullopt, std::nullopt, "q");
    c.insert(q.begin(), q.end());
    const ProfileTable t = performance_profile(c);
    CHECK(t.problems == std::vector<std::string>{"p"});
    CHECK(t.excluded == std::vector<std::string>{"q"});
  }
  CHECK_THROWS_AS(performance_profile(CountMap{}), Error);
}

TEST_CASE("random profiles are monotone and match a direct count") {
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> count(1, 5000);
  for (int trial = 0; trial < 20; ++trial) {
    CountMap c;
    for (int p = 0; p < 8; ++p)
      for (const char* v : {"a", "b", "c"})
        c[{"p" + std::to_string(p), v}] = count(gen) % 5 == 0 ? std::nullopt : std::optional<std::int64_t>(count(gen));
    const ProfileTable t = performance_profile(c);
    const auto grid = profile_grid();
    for (std::size_t v = 0; v < t.variants.size(); ++v) {
      for (std::size_t i = 1; i < grid.size(); ++i) CHECK(t.curves[v][i] >= t.curves[v][i - 1]);
      for (std::size_t i = 0; i < grid.size(); i += 13) {
        int hits = 0;
        for (std::size_t p = 0; p < t.problems.size(); ++p) {
          std::int64_t best = std::numeric_limits<std::int64_t>::max();
          for (const std::string& w : t.variants) {
            const auto x = c.at({t.problems[p], w});
            if (x) best = std::min(best, *x);
          }
          const auto mine = c.at({t.problems[p], t.variants[v]});
          if (mine && std::log2(static_cast<double>(*mine) / best) <= grid[i]) ++hits;
        }
        CHECK(t.curves[v][i] == static_cast<double>(hits) / t.problems.size());
      }
    }
    for (const auto& row : t.ratios)
      for (double r : row) CHECK(r >= 1.0);
  }
}

TEST_CASE("m choices and names") {
  CHECK(MChoice::parse("n").resolve(7) == 7);
  CHECK(MChoice::parse("2n").resolve(7) == 14);
  CHECK(MChoice::parse("3").resolve(7) == 3);
  CHECK(MChoice::parse("2n").label() == "2n");
  CHECK(variant_name(Method::fo, MChoice::parse("2n")) == "fo_m2n");
  CHECK(variant_name(Method::zo, MChoice::parse("1")) == "zo_m1");
  CHECK_THROWS_AS(MChoice::parse("0"), Error);
  CHECK_THROWS_AS(MChoice::parse("x"), Error);
  CHECK_THROWS_AS(MChoice::parse("3n"), Error);
  CHECK(parse_method("zo") == Method::zo);
  CHECK_THROWS_AS(parse_method("so"), Error);
}

TEST_CASE("number formatting round-trips") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e-300) == "1e-300");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(kInf) == "inf");
  CHECK(format_double(-kInf) == "-inf");
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 100; ++i) {
    const double v = u(gen) * std::pow(10.0, i % 20 - 10);
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("spec validation") {
  BenchmarkSpec s;
  s.problems = {"nope"};
  CHECK_THROWS_AS(run_benchmark(s), Error);
  s = BenchmarkSpec{};
  s.jobs = 0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = BenchmarkSpec{};
  s.methods.clear();
  CHECK_THROWS_AS(s.validate(), Error);
  CHECK(BenchmarkSpec{}.resolved_problems().size() == 12);
}

TEST_CASE("small benchmark: artifacts agree with each other and are deterministic") {
  const fs::path out1 = scratch_dir("a");
  const fs::path out3 = scratch_dir("b");
  const BenchmarkOutcome res = run_benchmark(small_spec(out1, 1));
  run_benchmark(small_spec(out3, 3));

  REQUIRE(res.runs.size() == 12);
  REQUIRE(res.fo_profile);
  REQUIRE(res.zo_profile);

  const auto summary = read_table(out1 / "summary.tsv", '\t');
  REQUIRE(summary.size() == 13);
  CHECK(summary[0] == std::vector<std::string>{"problem", "method", "m", "success", "metric", "best_F", "termination"});

  CountMap fo_counts, zo_counts;
  int successes = 0;
  for (std::size_t i = 1; i < summary.size(); ++i) {
    const auto& row = summary[i];
    const std::string variant = row[1] + "_m" + row[2];
    const bool success = row[3] == "1";
    const auto trace = read_table(out1 / "traces" / (row[0] + "__" + variant + ".csv"), ',');
    REQUIRE(trace.size() >= 1);
    CHECK(trace[0].size() == 10);
    std::optional<std::int64_t> metric;
    if (success) {
      ++successes;
      metric = std::stoll(row[4]);
      // the metric is the oracle snapshot of some trace row
      bool found = false;
      for (std::size_t r = 1; r < trace.size() && !found; ++r) {
        const std::int64_t f = std::stoll(trace[r][5]);
        const std::int64_t g = std::stoll(trace[r][6]);
        found = (row[1] == "fo" ? f + g : f) == *metric;
        if (found && row[1] == "fo") CHECK(std::stod(trace[r][9]) <= 1e-4);
      }
      CHECK(found);
    } else {
      CHECK(row[4] == "NA");
    }
    (row[1] == "fo" ? fo_counts : zo_counts)[{row[0], variant}] = metric;
  }

  CHECK(successes >= 3);

  // profile file recomputed from the summary alone
  for (const auto& [name, counts] : {std::pair{"fo", fo_counts}, std::pair{"zo", zo_counts}}) {
    const ProfileTable t = performance_profile(counts);
    const auto prof = read_table(out1 / (std::string("profile_") + name + ".tsv"), '\t');
    REQUIRE(prof.size() == 203);
    CHECK(prof[0][0] == "x");
    for (std::size_t v = 0; v < t.variants.size(); ++v) CHECK(prof[0][v + 1] == "curve_" + t.variants[v]);
    for (std::size_t i = 0; i < 201; ++i)
      for (std::size_t v = 0; v < t.variants.size(); ++v) CHECK(std::stod(prof[i + 1][v + 1]) == t.curves[v][i]);
    CHECK(prof.back()[0] == "# excluded");
  }

  for (const char* f : {"summary.tsv", "profile_fo.tsv", "profile_zo.tsv", "config.tsv"})
    CHECK(slurp(out1 / f) == slurp(out3 / f));
  for (const auto& entry : fs::directory_iterator(out1 / "traces"))
    CHECK(slurp(entry.path()) == slurp(out3 / "traces" / entry.path().filename()));

  fs::remove_all(out1);
  fs::remove_all(out3);
}
