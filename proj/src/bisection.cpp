#include "mmest/bisection.hpp"

#include <cmath>

#include "mmest/error.hpp"

namespace mmest {

void FunctionalProblem::validate() const {
  if (K < 1) throw Error(ErrorCode::kInvalidArgument, "K must be positive");
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw Error(ErrorCode::kEpsilonOutOfRange, "epsilon must lie in (0, 1/2)");
  }
  if (sets.empty()) throw Error(ErrorCode::kEmptyList, "no signal sets");
  const Eigen::Index n = f.domain().dim();
  if (encoding.in_dim() != n || encoding.out_dim() != scheme.d() ||
      encoding.f.size() != encoding.out_dim()) {
    throw Error(ErrorCode::kInvalidArgument, "encoding has wrong shape");
  }
  for (const auto& X : sets) {
    if (X.dim() != n) throw Error(ErrorCode::kInvalidArgument, "signal set has wrong dimension");
    if (X.is_empty()) throw Error(ErrorCode::kInfeasible, "empty signal set");
    check_inside_domain(scheme, ParamSet{X, encoding});
  }
}

namespace {

std::vector<ConvexCompactSet> level_pieces(const FunctionalProblem& problem,
                                           const std::vector<HalfspacePiece>& pieces) {
  std::vector<ConvexCompactSet> out;
  const ConvexCompactSet& domain = problem.f.domain();
  for (const auto& X : problem.sets) {
    const ConvexCompactSet base = X.intersect(domain);
    for (const auto& p : pieces) {
      ConvexCompactSet z = base.with_inequalities(p.A, p.b);
      if (!z.is_empty()) out.push_back(std::move(z));
    }
  }
  return out;
}

}  // namespace

std::vector<ConvexCompactSet> upper_sets(const FunctionalProblem& problem, double a) {
  return level_pieces(problem, problem.f.pieces_geq(a));
}

std::vector<ConvexCompactSet> lower_sets(const FunctionalProblem& problem, double a) {
  return level_pieces(problem, problem.f.pieces_leq(a));
}

std::pair<double, double> function_bounds(const FunctionalProblem& problem) {
  const NConvexFunction& f = problem.f;
  const Eigen::Index n = f.domain().dim();
  double lo = kInf, hi = -kInf;
  std::vector<ConvexCompactSet> bases;
  for (const auto& X : problem.sets) {
    ConvexCompactSet base = X.intersect(f.domain());
    if (!base.is_empty()) bases.push_back(std::move(base));
  }
  if (bases.empty()) throw Error(ErrorCode::kInfeasible, "signal sets miss the function domain");

  if (f.kind() == "affine") {
    const double c = f.eval(Vec::Zero(n));
    Vec g(n);
    for (Eigen::Index k = 0; k < n; ++k) g(k) = f.eval(Vec::Unit(n, k)) - c;
    for (const auto& base : bases) {
      lo = std::min(lo, base.lp_minimize(g).value + c);
      hi = std::max(hi, -base.lp_minimize(-g).value + c);
    }
    return {lo, hi};
  }

  // Upper feasibility of a is "max f >= a", lower feasibility "min f <= a".
  const double v0 = f.eval(bases.front().lp_minimize(Vec::Zero(n)).point);
  auto upper = [&](double a) { return !upper_sets(problem, a).empty(); };
  auto lower = [&](double a) { return !lower_sets(problem, a).empty(); };
  auto search = [&](auto feasible, double direction) {
    double inside = v0, step = std::max(1.0, std::abs(v0));
    double outside = v0 + direction * step;
    for (int k = 0; feasible(outside); ++k) {
      if (k == 200) throw Error(ErrorCode::kUnbounded, "function is unbounded on the sets");
      inside = outside;
      step *= 2.0;
      outside = v0 + direction * step;
    }
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (inside + outside);
      (feasible(mid) ? inside : outside) = mid;
    }
    return outside;
  };
  return {search(lower, -1.0), search(upper, 1.0)};
}

Verdict SegmentTest::verdict(const Observation& obs) const {
  if (!test) return constant;
  return infer_color(*test, obs) == Color::kBlue ? Verdict::kRight : Verdict::kLeft;
}

ProblemOracle::ProblemOracle(FunctionalProblem problem, int threads)
    : problem_(std::move(problem)), threads_(threads) {}

bool ProblemOracle::upper_feasible(double a) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = upper_.find(a); it != upper_.end()) return it->second;
  }
  const bool value = !upper_sets(problem_, a).empty();
  std::lock_guard lock(mutex_);
  upper_[a] = value;
  return value;
}

bool ProblemOracle::lower_feasible(double a) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = lower_.find(a); it != lower_.end()) return it->second;
  }
  const bool value = !lower_sets(problem_, a).empty();
  std::lock_guard lock(mutex_);
  lower_[a] = value;
  return value;
}

SegmentTest ProblemOracle::test(double a, double b, Side side) const {
  SegmentTest out;
  out.a = a;
  out.b = b;
  out.side = side;
  if (side == Side::kRight) {
    if (!lower_feasible(a)) {
      throw Error(ErrorCode::kInvalidArgument, "right test needs a lower-feasible left end");
    }
    if (!upper_feasible(b)) {
      out.constant = Verdict::kLeft;
      return out;
    }
  } else {
    if (!upper_feasible(b)) {
      throw Error(ErrorCode::kInvalidArgument, "left test needs an upper-feasible right end");
    }
    if (!lower_feasible(a)) {
      out.constant = Verdict::kRight;
      return out;
    }
  }
  const auto key = std::make_pair(a, b);
  std::shared_ptr<const ColorTest> test;
  {
    std::lock_guard lock(mutex_);
    if (auto it = tests_.find(key); it != tests_.end()) test = it->second;
  }
  if (!test) {
    std::vector<ParamSet> right, left;
    for (auto& z : upper_sets(problem_, b)) right.push_back({std::move(z), problem_.encoding});
    for (auto& z : lower_sets(problem_, a)) left.push_back({std::move(z), problem_.encoding});
    test = std::make_shared<const ColorTest>(
        build_color_test(problem_.scheme, right, left, problem_.K, threads_));
    std::lock_guard lock(mutex_);
    tests_.emplace(key, test);
  }
  out.test = test;
  out.sigma = test->eps_K;
  return out;
}

size_t ProblemOracle::cached_tests() const {
  std::lock_guard lock(mutex_);
  return tests_.size();
}

SegmentTest right_test(const FunctionalProblem& problem, double a, double b) {
  return ProblemOracle(problem).test(a, b, Side::kRight);
}

SegmentTest left_test(const FunctionalProblem& problem, double a, double b) {
  return ProblemOracle(problem).test(a, b, Side::kLeft);
}

bool is_delta_good(const SegmentOracle& oracle, double a, double b, Side side, double delta) {
  if (!(b > a)) return false;
  const bool feasible = side == Side::kRight ? oracle.lower_feasible(a) : oracle.upper_feasible(b);
  if (!feasible) return false;
  return oracle.test(a, b, side).sigma <= delta;
}

bool is_delta_good(const FunctionalProblem& problem, double a, double b, Side side, double delta) {
  return is_delta_good(ProblemOracle(problem), a, b, side, delta);
}

double kappa_maximal(const SegmentOracle& oracle, Side side, double fixed, double far,
                     double delta, double kappa) {
  if (!(kappa > 0.0)) throw Error(ErrorCode::kInvalidArgument, "kappa must be positive");
  double previous = far;
  for (long k = 1;; ++k) {
    const double candidate =
        side == Side::kRight ? far - static_cast<double>(k) * kappa : far + static_cast<double>(k) * kappa;
    const bool good = side == Side::kRight
                          ? is_delta_good(oracle, fixed, candidate, side, delta)
                          : is_delta_good(oracle, candidate, fixed, side, delta);
    if (!good) return previous;
    previous = candidate;
  }
}

const char* to_string(StepRule rule) {
  switch (rule) {
    case StepRule::kInfeasibleShrink: return "infeasible_shrink";
    case StepRule::kConsensus: return "consensus";
    case StepRule::kDisagreement: return "disagreement";
    case StepRule::kNotGood: return "not_good";
  }
  return "unknown";
}

const char* to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::kDisagreement: return "disagreement";
    case TerminationReason::kNotGood: return "not_good";
    case TerminationReason::kMaxSteps: return "max_steps";
    case TerminationReason::kInfeasibilityShrink: return "infeasibility_shrink";
  }
  return "unknown";
}

std::pair<double, double> snap_bounds(double a0, double b0) {
  constexpr double kGrid = 16777216.0;  // 2^24
  return {std::floor(a0 * kGrid) / kGrid, std::ceil(b0 * kGrid) / kGrid};
}

BisectionTrace bisect(const SegmentOracle& oracle, const Observation& obs, int L, double delta,
                      double kappa, double a0, double b0) {
  if (!(a0 < b0)) throw Error(ErrorCode::kInvalidArgument, "need a0 < b0");
  auto [a, b] = snap_bounds(a0, b0);
  BisectionTrace trace;
  trace.localizers.emplace_back(a, b);
  auto finish = [&](TerminationReason reason, double lo, double hi) {
    trace.reason = reason;
    trace.lo = lo;
    trace.hi = hi;
    return trace;
  };

  for (int ell = 1; ell <= L; ++ell) {
    BisectionStep step;
    step.ell = ell;
    step.a = a;
    step.b = b;
    const double c = 0.5 * (a + b);
    step.c = c;

    const bool up = oracle.upper_feasible(c);
    const bool low = oracle.lower_feasible(c);
    if (!up && !low) {
      throw Error(ErrorCode::kBothSidesInfeasible, "midpoint is neither upper- nor lower-feasible");
    }
    if (!up || !low) {
      step.rule = StepRule::kInfeasibleShrink;
      (up ? a : b) = c;
      trace.steps.push_back(step);
      trace.localizers.emplace_back(a, b);
      if (ell == L) return finish(TerminationReason::kInfeasibilityShrink, a, b);
      continue;
    }

    if (!is_delta_good(oracle, c, b, Side::kRight, delta)) {
      step.rule = StepRule::kNotGood;
      trace.steps.push_back(step);
      return finish(TerminationReason::kNotGood, a, b);
    }
    const double v = kappa_maximal(oracle, Side::kRight, c, b, delta, kappa);
    step.v = v;
    if (!is_delta_good(oracle, a, c, Side::kLeft, delta)) {
      step.rule = StepRule::kNotGood;
      trace.steps.push_back(step);
      return finish(TerminationReason::kNotGood, a, b);
    }
    const double u = kappa_maximal(oracle, Side::kLeft, c, a, delta, kappa);
    step.u = u;

    const SegmentTest right = oracle.test(c, v, Side::kRight);
    const SegmentTest left = oracle.test(u, c, Side::kLeft);
    step.sigma_right = right.sigma;
    step.sigma_left = left.sigma;
    step.verdict_right = right.verdict(obs);
    step.verdict_left = left.verdict(obs);
    if (*step.verdict_right != *step.verdict_left) {
      step.rule = StepRule::kDisagreement;
      trace.steps.push_back(step);
      return finish(TerminationReason::kDisagreement, u, v);
    }
    step.rule = StepRule::kConsensus;
    (*step.verdict_right == Verdict::kRight ? a : b) = c;
    trace.steps.push_back(step);
    trace.localizers.emplace_back(a, b);
  }
  return finish(TerminationReason::kMaxSteps, a, b);
}

BisectionParams choose_params(double rho, double epsilon, double a0, double b0, int K_bar, int N,
                              int I, double kappa, std::optional<int> L_override) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw Error(ErrorCode::kEpsilonOutOfRange, "epsilon must lie in (0, 1/2)");
  }
  if (!(rho > 0.0) || K_bar < 1 || N < 1 || I < 1 || !(b0 > a0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid bisection parameters");
  }
  BisectionParams p;
  p.kappa = kappa;
  if (L_override) {
    p.L = *L_override;
  } else if (b0 - a0 <= 2.0 * rho) {
    p.trivial = true;
    return p;
  } else {
    p.L = static_cast<int>(std::ceil(std::log2((b0 - a0) / (2.0 * rho))));
  }
  if (p.L < 1) throw Error(ErrorCode::kInvalidArgument, "L must be positive");
  p.delta = epsilon / (2.0 * p.L);
  const double factor = 2.0 * std::log(2.0 * p.L * N * I / epsilon) /
                        std::log(1.0 / (4.0 * epsilon * (1.0 - epsilon)));
  p.K = static_cast<int>(std::ceil(factor * K_bar));
  return p;
}

namespace {

const char* to_string(Verdict v) { return v == Verdict::kRight ? "right" : "left"; }

}  // namespace

json to_json(const BisectionTrace& trace) {
  json localizers = json::array();
  for (auto [lo, hi] : trace.localizers) localizers.push_back({lo, hi});
  json steps = json::array();
  for (const auto& s : trace.steps) {
    json j{{"ell", s.ell}, {"a", s.a}, {"b", s.b}, {"c", s.c}, {"rule", to_string(s.rule)}};
    if (s.u) j["u"] = *s.u;
    if (s.v) j["v"] = *s.v;
    if (s.sigma_right) j["sigma_right"] = *s.sigma_right;
    if (s.sigma_left) j["sigma_left"] = *s.sigma_left;
    if (s.verdict_right) j["verdict_right"] = to_string(*s.verdict_right);
    if (s.verdict_left) j["verdict_left"] = to_string(*s.verdict_left);
    steps.push_back(std::move(j));
  }
  return json{{"localizers", localizers}, {"steps", steps},
              {"reason", to_string(trace.reason)}, {"output", {trace.lo, trace.hi}},
              {"estimate", trace.estimate()}};
}

}  // namespace mmest
