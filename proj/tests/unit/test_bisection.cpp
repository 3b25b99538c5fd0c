#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"
#include "mmest/bisection.hpp"
#include "mmest/error.hpp"
#include "mmest/rng.hpp"

using namespace mmest;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Ideal model: f(X) = [fmin, fmax], sigma decays with the segment width, and
// each test answers by comparing a fixed true value with the bisection midpoint.
struct StubOracle final : SegmentOracle {
  double fmin = 0.0, fmax = 1.0, truth = 0.3, rate = 50.0;
  std::function<Verdict(double, double, Side)> override_verdict;
  mutable int calls = 0;

  bool upper_feasible(double a) const override { return a <= fmax; }
  bool lower_feasible(double a) const override { return a >= fmin; }
  SegmentTest test(double a, double b, Side side) const override {
    ++calls;
    SegmentTest t;
    t.a = a;
    t.b = b;
    t.side = side;
    if (side == Side::kRight && !upper_feasible(b)) return t;
    if (side == Side::kLeft && !lower_feasible(a)) {
      t.constant = Verdict::kRight;
      return t;
    }
    t.sigma = std::exp(-rate * (b - a));
    // Both tests compare the truth with the shared midpoint c.
    const double c = side == Side::kRight ? a : b;
    t.constant = override_verdict ? override_verdict(a, b, side)
                                  : (truth > c ? Verdict::kRight : Verdict::kLeft);
    return t;
  }
};

Observation dummy_obs() { return Observation::from_points(SchemeKind::kGaussian, Mat::Zero(1, 1)); }

void check_invariants(const BisectionTrace& tr) {
  for (size_t k = 1; k < tr.localizers.size(); ++k) {
    const auto [a0, b0] = tr.localizers[k - 1];
    const auto [a1, b1] = tr.localizers[k];
    CHECK(a1 >= a0);
    CHECK(b1 <= b0);
    CHECK(b1 - a1 == 0.5 * (b0 - a0));
  }
  CHECK(tr.lo >= tr.localizers.front().first);
  CHECK(tr.hi <= tr.localizers.front().second);
}

FunctionalProblem interval_problem(int K, double lo, double hi) {
  auto domain = ConvexCompactSet::box(Vec::Constant(1, lo), Vec::Constant(1, hi));
  return FunctionalProblem{ObservationScheme::gaussian(1), K, {domain}, AffineMap::identity(1),
                           affine_fn(domain, vec({1}), 0), 0.1};
}

}  // namespace

TEST_CASE("consensus sequence follows the true half") {
  StubOracle stub;
  for (double truth : {0.05, 0.3, 0.61, 0.99}) {
    stub.truth = truth;
    const auto tr = bisect(stub, dummy_obs(), 6, 0.5, 1.0 / 128, 0.0, 1.0);
    check_invariants(tr);
    CHECK(tr.reason == TerminationReason::kMaxSteps);
    CHECK(tr.width() == 1.0 / 64);
    CHECK(tr.lo <= truth);
    CHECK(truth <= tr.hi);
    for (const auto& s : tr.steps) CHECK(s.rule == StepRule::kConsensus);
  }
}

TEST_CASE("infeasible midpoint shrinks") {
  StubOracle stub;
  stub.fmax = 0.4;
  auto tr = bisect(stub, dummy_obs(), 1, 0.5, 0.01, 0.0, 1.0);
  CHECK(tr.steps[0].rule == StepRule::kInfeasibleShrink);
  CHECK(tr.reason == TerminationReason::kInfeasibilityShrink);
  CHECK(tr.lo == 0.0);
  CHECK(tr.hi == 0.5);
  CHECK(stub.calls == 0);

  stub.fmax = 1.0;
  stub.fmin = 0.7;
  stub.truth = 0.8;
  tr = bisect(stub, dummy_obs(), 3, 0.5, 1.0 / 64, 0.0, 1.0);
  check_invariants(tr);
  CHECK(tr.steps[0].rule == StepRule::kInfeasibleShrink);
  CHECK(tr.localizers[1] == std::make_pair(0.5, 1.0));

  StubOracle broken;
  broken.fmin = 0.8;
  broken.fmax = 0.2;
  CHECK_THROWS_AS(bisect(broken, dummy_obs(), 2, 0.5, 0.01, 0.0, 1.0), Error);
}

TEST_CASE("not-good and disagreement termination") {
  StubOracle stub;
  stub.rate = 1.0;  // sigma > 0.5 for every subsegment of [0, 1]
  auto tr = bisect(stub, dummy_obs(), 5, 0.5, 0.01, 0.0, 1.0);
  CHECK(tr.reason == TerminationReason::kNotGood);
  CHECK(tr.lo == 0.0);
  CHECK(tr.hi == 1.0);

  stub.rate = 50.0;
  stub.override_verdict = [](double, double, Side side) {
    return side == Side::kRight ? Verdict::kRight : Verdict::kLeft;
  };
  tr = bisect(stub, dummy_obs(), 5, std::exp(-50.0 * 0.1), 1.0 / 64, 0.0, 1.0);
  REQUIRE(tr.reason == TerminationReason::kDisagreement);
  const auto& last = tr.steps.back();
  CHECK(tr.lo == *last.u);
  CHECK(tr.hi == *last.v);
  CHECK(is_delta_good(stub, *last.u, last.c, Side::kLeft, std::exp(-5.0)));
  CHECK(is_delta_good(stub, last.c, *last.v, Side::kRight, std::exp(-5.0)));
}

TEST_CASE("kappa-maximal search") {
  StubOracle stub;
  stub.rate = 20.0;
  const double delta = 0.05, kappa = 1.0 / 256;
  const double threshold = std::log(1 / delta) / stub.rate;  // sigma(w) <= delta iff w >= threshold
  const double v = kappa_maximal(stub, Side::kRight, 0.25, 0.75, delta, kappa);
  CHECK(v - 0.25 >= threshold);
  CHECK(v - kappa - 0.25 < threshold);
  const double u = kappa_maximal(stub, Side::kLeft, 0.75, 0.25, delta, kappa);
  CHECK(0.75 - u >= threshold);
  CHECK(0.75 - (u + kappa) < threshold);
  // First shrink is already not good.
  CHECK(kappa_maximal(stub, Side::kRight, 0.0, threshold + kappa / 2, delta, kappa) ==
        threshold + kappa / 2);
  // Every segment good: walks to within kappa of the fixed end.
  const double w = kappa_maximal(stub, Side::kRight, 0.0, 0.5, 1.0, kappa);
  CHECK(w > 0.0);
  CHECK(w <= kappa);
  CHECK_THROWS_AS(kappa_maximal(stub, Side::kRight, 0.0, 0.5, 1.0, 0.0), Error);
}

TEST_CASE("bounds snapping and parameter choice") {
  auto [a, b] = snap_bounds(0.1, 0.3);
  CHECK(a <= 0.1);
  CHECK(b >= 0.3);
  CHECK(0.1 - a < std::ldexp(1.0, -24));
  CHECK(std::ldexp(a, 24) == std::floor(std::ldexp(a, 24)));

  auto p = choose_params(1.0 / 16, 0.1, 0.0, 1.0, 100, 1, 1, 0.01);
  CHECK(p.L == 3);
  CHECK(p.delta == doctest::Approx(0.1 / 6));
  CHECK_FALSE(p.trivial);
  p = choose_params(0.5, 0.1, 0.0, 1.0, 100, 1, 1, 0.01);
  CHECK(p.trivial);
  CHECK(p.L == 0);
  CHECK(p.K == 0);
  p = choose_params(1.0 / 64, 0.01, 0.0, 1.0, 100, 2, 3, 0.01, 5);
  CHECK(p.L == 5);
  CHECK(p.K == static_cast<int>(std::ceil(2 * std::log(6000.0) / std::log(1 / (0.04 * 0.99)) * 100)));
  CHECK_THROWS_AS(choose_params(0.1, 0.5, 0, 1, 1, 1, 1, 0.1), Error);
  CHECK_THROWS_AS(choose_params(0.1, 0.0, 0, 1, 1, 1, 1, 0.1), Error);
}

TEST_CASE("upper and lower sets") {
  auto p = interval_problem(4, 0.2, 0.7);
  CHECK(upper_sets(p, 0.5).size() == 1);
  CHECK(lower_sets(p, 0.1).empty());
  CHECK(upper_sets(p, 0.8).empty());
  CHECK(lower_sets(p, 0.2).size() == 1);

  // Two signal sets and a 2-convex function: up to 4 upper sets.
  auto domain = ConvexCompactSet::box(Vec::Zero(2), Vec::Ones(2));
  auto f = max_of({affine_fn(domain, vec({1, 0}), 0), affine_fn(domain, vec({0, 1}), 0)});
  FunctionalProblem q{ObservationScheme::gaussian(2), 1,
                      {ConvexCompactSet::box(vec({0, 0}), vec({0.6, 1})),
                       ConvexCompactSet::box(vec({0.5, 0}), vec({1, 0.3}))},
                      AffineMap::identity(2), f, 0.1};
  // Brute-force emptiness oracle over (i, nu).
  int expected = 0;
  for (const auto& X : q.sets) {
    expected += X.hi()(0) >= 0.55;
    expected += X.hi()(1) >= 0.55;
  }
  CHECK(static_cast<int>(upper_sets(q, 0.55).size()) == expected);
  CHECK(lower_sets(q, 0.55).size() == 2);
  CHECK(lower_sets(q, 0.45).size() == 1);
}

TEST_CASE("segment tests") {
  auto p = interval_problem(4, 0.0, 1.0);
  auto t = right_test(p, 0.2, 1.5);
  CHECK(t.test == nullptr);
  CHECK(t.sigma == 0.0);
  CHECK(t.constant == Verdict::kLeft);
  t = left_test(p, -0.5, 0.3);
  CHECK(t.test == nullptr);
  CHECK(t.constant == Verdict::kRight);
  CHECK_THROWS_AS(right_test(p, -0.5, 0.3), Error);

  ProblemOracle oracle(p);
  auto r = oracle.test(0.2, 0.6, Side::kRight);
  auto l = oracle.test(0.2, 0.6, Side::kLeft);
  CHECK(r.test == l.test);
  CHECK(oracle.cached_tests() == 1);
  // Gaussian closed form: affinity exp(-|mu - nu|^2 / 8) at the closest pair.
  CHECK(r.sigma == doctest::Approx(std::exp(-4 * 0.16 / 8)).epsilon(1e-6));
  Rng rng(1);
  for (double x : {0.0, 0.1, 0.7, 1.0}) {
    auto obs = sample(p.scheme, vec({x}), rng, p.K);
    CHECK(r.verdict(obs) == l.verdict(obs));
  }

  // Two singleton sets under a Discrete encoding.
  auto box = ConvexCompactSet::box(Vec::Zero(1), Vec::Ones(1));
  Mat F(2, 1);
  F << 1, -1;
  FunctionalProblem d{ObservationScheme::discrete(2), 5,
                      {ConvexCompactSet::point(vec({0.1})), ConvexCompactSet::point(vec({0.8}))},
                      AffineMap{F, vec({0, 1})}, affine_fn(box, vec({1}), 0), 0.1};
  const double aff = std::log(std::sqrt(0.1 * 0.8) + std::sqrt(0.9 * 0.2));
  CHECK(right_test(d, 0.3, 0.6).sigma == doctest::Approx(std::exp(5 * aff)).epsilon(1e-9));
}

TEST_CASE("delta-good on a Gaussian toy") {
  auto p = interval_problem(50, 0.0, 1.0);
  ProblemOracle oracle(p);
  // sigma([a, b]) = exp(-K (b - a)^2 / 8)
  const double w = 0.3;
  const double sigma = std::exp(-50 * w * w / 8);
  CHECK(is_delta_good(oracle, 0.2, 0.2 + w, Side::kRight, sigma * 1.001));
  CHECK_FALSE(is_delta_good(oracle, 0.2, 0.2 + w, Side::kRight, sigma * 0.999));
  CHECK(is_delta_good(oracle, 0.2, 0.2 + w, Side::kRight, sigma * 1.001) ==
        is_delta_good(oracle, 0.2, 0.2 + w, Side::kRight, sigma * 1.001));
  CHECK(is_delta_good(oracle, 0.5, 1.5, Side::kRight, 1e-6));
  CHECK_FALSE(is_delta_good(oracle, 0.5, 0.5, Side::kRight, 1.0));
  CHECK_FALSE(is_delta_good(oracle, -1.0, -0.5, Side::kRight, 1.0));

  ProblemOracle sharper(interval_problem(200, 0.0, 1.0));
  const double kappa = 1.0 / 512, delta = 0.01;
  const double threshold = std::sqrt(8 * std::log(1 / delta) / 200);
  const double v = kappa_maximal(sharper, Side::kRight, 0.1, 0.9, delta, kappa);
  CHECK(v - 0.1 >= threshold - 1e-6);
  CHECK(v - 0.1 - kappa < threshold);
}

TEST_CASE("function bounds") {
  auto p = interval_problem(1, 0.2, 0.7);
  auto [a, b] = function_bounds(p);
  CHECK(a == doctest::Approx(0.2));
  CHECK(b == doctest::Approx(0.7));

  auto box = ConvexCompactSet::box(vec({0.1, 0.2}), vec({1, 2}));
  auto f = linear_fractional(box, vec({1, -1}), 0.5, vec({0.5, 1}), 0.3);
  FunctionalProblem q{ObservationScheme::gaussian(2), 1, {box}, AffineMap::identity(2), f, 0.1};
  double lo = kInf, hi = -kInf;
  for (double x : {0.1, 1.0}) {
    for (double y : {0.2, 2.0}) {
      lo = std::min(lo, f.eval(vec({x, y})));
      hi = std::max(hi, f.eval(vec({x, y})));
    }
  }
  auto [qa, qb] = function_bounds(q);
  CHECK(qa <= lo);
  CHECK(qb >= hi);
  CHECK(lo - qa < 1e-8);
  CHECK(qb - hi < 1e-8);
}

TEST_CASE("end-to-end Gaussian bisection with large K") {
  const int K = 1000000;
  auto p = interval_problem(K, 0.0, 1.0);
  ProblemOracle oracle(p);
  Rng rng(7);
  for (double x : {0.19, 0.81, 0.44}) {
    auto obs = sample(p.scheme, vec({x}), rng, K);
    auto tr = bisect(oracle, obs, 3, 1.0, 1.0 / 64, 0.0, 1.0);
    check_invariants(tr);
    CHECK(tr.reason == TerminationReason::kMaxSteps);
    CHECK(tr.width() == 1.0 / 8);
    CHECK(tr.lo <= x);
    CHECK(x <= tr.hi);
    CHECK(to_json(tr).dump() == to_json(bisect(oracle, obs, 3, 1.0, 1.0 / 64, 0.0, 1.0)).dump());
  }
  const json j = to_json(bisect(oracle, sample(p.scheme, vec({0.3}), rng, K), 2, 1.0, 1.0 / 64, 0, 1));
  CHECK(j.contains("localizers"));
  CHECK(j.at("steps").size() == 2);
  CHECK(j.at("steps")[0].contains("sigma_right"));
  CHECK(j.at("reason") == "max_steps");
}

TEST_CASE("bisection reliability on a small discrete model") {
  // d = 3, two signal sets, f = max(x1, x2) (N = 2).
  const int d = 3;
  auto domain = ConvexCompactSet::simplex(d).with_inequalities(-Mat::Identity(d, d),
                                                              Vec::Constant(d, -0.05));
  auto f = max_of({affine_fn(domain, vec({1, 0, 0}), 0), affine_fn(domain, vec({0, 1, 0}), 0)});
  Mat lower_x2(1, 3);
  lower_x2 << 0, -1, 0;
  FunctionalProblem p{ObservationScheme::discrete(d), 400,
                      {domain.with_inequalities(vec({0, 0, -1}).transpose(), vec({-0.3})),
                       domain.with_inequalities(lower_x2, vec({-0.4}))},
                      AffineMap::identity(d), f, 0.1};
  p.validate();
  auto [a0, b0] = function_bounds(p);
  const int L = 3;
  const double delta = p.epsilon / (2 * L);
  ProblemOracle oracle(p);
  std::mt19937_64 gen(11);
  std::exponential_distribution<double> e(1.0);
  Rng rng(12);
  const int trials = 300;
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    // Random point of one of the sets: Dirichlet mixing of a few LP vertices.
    const auto& X = p.sets[static_cast<size_t>(t % 2)];
    Vec x = Vec::Zero(d);
    double total = 0;
    for (int k = 0; k < 4; ++k) {
      Vec c(d);
      for (int m = 0; m < d; ++m) c(m) = e(gen) - 1.0;
      const double w = e(gen);
      x += w * X.lp_minimize(c).point;
      total += w;
    }
    x /= total;
    auto obs = sample(p.scheme, x, rng, p.K);
    auto tr = bisect(oracle, obs, L, delta, 1.0 / 128, a0, b0);
    check_invariants(tr);
    const double v = f.eval(x);
    if (tr.lo <= v && v <= tr.hi) ++hits;
  }
  CHECK(hits >= trials * (1 - p.epsilon - 3 * std::sqrt(p.epsilon / trials)));
}
