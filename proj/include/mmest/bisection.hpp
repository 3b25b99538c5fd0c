#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "mmest/color_test.hpp"
#include "mmest/nconvex.hpp"

namespace mmest {

// Estimate f(x) for x in X_1 u ... u X_I from K observations with parameter
// encoding(x).
struct FunctionalProblem {
  ObservationScheme scheme;
  int K = 1;
  std::vector<ConvexCompactSet> sets;
  AffineMap encoding;
  NConvexFunction f;
  double epsilon = 0.1;

  int I() const { return static_cast<int>(sets.size()); }
  // Shapes, nonempty sets, and encoding(X_i) inside the parameter domain.
  void validate() const;
};

// Nonempty X_i n {f >= a} pieces (resp. <= a), i-major.
std::vector<ConvexCompactSet> upper_sets(const FunctionalProblem& problem, double a);
std::vector<ConvexCompactSet> lower_sets(const FunctionalProblem& problem, double a);

// Valid bounds a0 <= min f and b0 >= max f over the union of the sets: exact
// LP values for affine f, otherwise a 40-step search on level-set
// feasibility that keeps only certified endpoints.
std::pair<double, double> function_bounds(const FunctionalProblem& problem);

enum class Side { kLeft, kRight };
enum class Verdict { kLeft, kRight };

struct SegmentTest {
  double a = 0.0, b = 0.0;
  Side side = Side::kRight;
  // Null in the degenerate cases, where `constant` is the verdict.
  std::shared_ptr<const ColorTest> test;
  Verdict constant = Verdict::kLeft;
  double sigma = 0.0;

  // Right iff some row of the color test matrix is nonnegative.
  Verdict verdict(const Observation& obs) const;
};

// What the recurrence needs to know about the model. Implementations must be
// deterministic; tests substitute stubs.
class SegmentOracle {
 public:
  virtual ~SegmentOracle() = default;
  virtual bool upper_feasible(double a) const = 0;
  virtual bool lower_feasible(double a) const = 0;
  // Right tests require lower-feasible a; left tests upper-feasible b.
  virtual SegmentTest test(double a, double b, Side side) const = 0;
};

// Oracle over a FunctionalProblem. Feasibility is memoized per level and color
// tests per segment, so one oracle can serve many observations. Thread-safe.
class ProblemOracle final : public SegmentOracle {
 public:
  explicit ProblemOracle(FunctionalProblem problem, int threads = 1);
  bool upper_feasible(double a) const override;
  bool lower_feasible(double a) const override;
  SegmentTest test(double a, double b, Side side) const override;
  const FunctionalProblem& problem() const { return problem_; }
  size_t cached_tests() const;

 private:
  FunctionalProblem problem_;
  int threads_;
  mutable std::mutex mutex_;
  mutable std::map<double, bool> upper_, lower_;
  mutable std::map<std::pair<double, double>, std::shared_ptr<const ColorTest>> tests_;
};

SegmentTest right_test(const FunctionalProblem& problem, double a, double b);
SegmentTest left_test(const FunctionalProblem& problem, double a, double b);

bool is_delta_good(const SegmentOracle& oracle, double a, double b, Side side, double delta);
bool is_delta_good(const FunctionalProblem& problem, double a, double b, Side side, double delta);

// Linear scan from the far endpoint towards the fixed one in steps of kappa;
// returns the last candidate whose segment is delta-good. Right side: segments
// [fixed, far - k kappa]. Left side: [far + k kappa, fixed].
double kappa_maximal(const SegmentOracle& oracle, Side side, double fixed, double far,
                     double delta, double kappa);

enum class StepRule { kInfeasibleShrink, kConsensus, kDisagreement, kNotGood };
enum class TerminationReason { kDisagreement, kNotGood, kMaxSteps, kInfeasibilityShrink };

const char* to_string(StepRule rule);
const char* to_string(TerminationReason reason);

struct BisectionStep {
  int ell = 0;
  double a = 0.0, b = 0.0, c = 0.0;
  StepRule rule = StepRule::kConsensus;
  std::optional<double> u, v;
  std::optional<double> sigma_right, sigma_left;
  std::optional<Verdict> verdict_right, verdict_left;
};

struct BisectionTrace {
  // Delta_0, Delta_1, ...
  std::vector<std::pair<double, double>> localizers;
  std::vector<BisectionStep> steps;
  TerminationReason reason = TerminationReason::kMaxSteps;
  double lo = 0.0, hi = 0.0;

  double estimate() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
};

// Snaps a0 down and b0 up to multiples of 2^-24 so that halving and kappa
// steps are exact in floating point.
std::pair<double, double> snap_bounds(double a0, double b0);

// Runs up to L steps on one fixed observation. a0 < b0 must bound f over the
// sets. Throws kBothSidesInfeasible if a midpoint is neither upper- nor
// lower-feasible.
BisectionTrace bisect(const SegmentOracle& oracle, const Observation& obs, int L, double delta,
                      double kappa, double a0, double b0);

struct BisectionParams {
  int L = 0;
  double delta = 0.0;
  double kappa = 0.0;
  int K = 0;
  // b0 - a0 <= 2 rho: the midpoint of [a0, b0] is already rho-accurate and
  // no observations are needed (L = K = 0).
  bool trivial = false;
};

// L = ceil(log2((b0 - a0) / (2 rho))), delta = eps / (2L),
// K = ceil(2 ln(2LNI/eps) / ln(1/(4 eps (1 - eps))) * K_bar).
BisectionParams choose_params(double rho, double epsilon, double a0, double b0, int K_bar, int N,
                              int I, double kappa, std::optional<int> L_override = std::nullopt);

json to_json(const BisectionTrace& trace);

}  // namespace mmest
