#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmest/bisection.hpp"
#include "mmest/linear_estimator.hpp"

namespace mmest {

// Linear functional of Gaussian singletons: I points x_i ~ N(0, I_n), y_i = A x_i
// with A (m x n) of unit spectral norm, f(x) = x_1.
struct LinearExperiment {
  int n = 20;
  int m = 10;
  int I = 100;
  int instances = 20;
  double r_cap = 1e6;
};

// Hazard rate s_j(x) = x_j / sum_{i >= j} x_i of a smooth lifetime law on
// {1..M}, observed through A = theta I + (1 - theta) R.
struct HazardExperiment {
  int M = 12;
  // 1-based index of the hazard rate.
  int j = 6;
  std::vector<double> theta{0.9};
  int L = 4;
  // Scan step for kappa-maximal segments, as a fraction of b0 - a0.
  double kappa_fraction = 1.0 / 256;
};

struct ExperimentConfig {
  std::string experiment;  // "linear_gaussian_singletons" or "hazard_bisection"
  std::uint64_t seed = 1;
  int threads = 1;
  double epsilon = 0.01;
  std::vector<int> K{1};
  int trials = 100;
  std::string csv = "results.csv";
  std::string svg;
  LinearExperiment linear;
  HazardExperiment hazard;
};

// Throws kConfig on unknown keys, wrong types or out-of-range values.
ExperimentConfig config_from_json(const json& j);
json to_json(const ExperimentConfig& config);

struct TrialRecord {
  std::string experiment;
  // theta for the hazard runner, empty for the linear one.
  std::string group;
  int K = 0;
  int instance = 0;
  int trial = 0;
  double truth = 0.0;
  double estimate = 0.0;
  double error = 0.0;
  // Certified risk (linear) or half-width of the output segment (bisection).
  double rho = 0.0;
  bool covered = false;
  // Half-width of the initial localizer (bisection only).
  double init_halfwidth = 0.0;
  std::string termination;
  double wall_seconds = 0.0;
};

// m x n matrix with i.i.d. N(0, 1) entries scaled to unit spectral norm.
Mat random_unit_norm_matrix(int m, int n, Rng& rng);

// {x : x_i >= 1/(3M), sum x = 1, |x_{i-1} - 2 x_i + x_{i+1}| <= 2/M^2}
ConvexCompactSet hazard_signal_set(int M);
// theta I + (1 - theta) R, R upper triangular with column i equal to 1/i on
// its first i entries.
Mat hazard_matrix(int M, double theta);
FunctionalProblem hazard_problem(int M, int j, double theta, int K, double epsilon);
// Convex combination of LP vertices of `set` with Dirichlet(1) weights.
Vec random_point(const ConvexCompactSet& set, Rng& rng, int vertices = 8);

std::vector<TrialRecord> run_linear_experiment(const ExperimentConfig& config);
std::vector<TrialRecord> run_hazard_experiment(const ExperimentConfig& config);
std::vector<TrialRecord> run_experiment(const ExperimentConfig& config);

// Deterministic CSV, schema v1: a "# csv-schema: v1" line, a header, one row
// per (instance, K, trial). Wall times go to the separate timing CSV so the
// main file is reproducible byte for byte.
std::string records_to_csv(const std::vector<TrialRecord>& records);
std::string timing_to_csv(const std::vector<TrialRecord>& records);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const;
};
// Throws kInvalidArgument on malformed input.
CsvTable parse_csv(const std::string& text);

struct BoxStats {
  std::string key;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  size_t count = 0;
};
// Five-number summaries of `value` grouped by `by`, groups ordered
// numerically when every key parses as a number, else lexicographically.
std::vector<BoxStats> box_stats(const CsvTable& table, const std::string& value,
                                const std::string& by);
std::string emit_boxplot(const CsvTable& table, const std::string& value, const std::string& by,
                         const std::string& title = "");

}  // namespace mmest
