#include <cmath>
#include <random>

#include "doctest.h"
#include "mmest/error.hpp"
#include "mmest/nconvex.hpp"

using namespace mmest;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

ConvexCompactSet unit_box(int n) { return ConvexCompactSet::box(Vec::Zero(n), Vec::Ones(n)); }

Vec uniform_box(std::mt19937_64& gen, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec x(n);
  for (int k = 0; k < n; ++k) x(k) = u(gen);
  return x;
}

Vec dirichlet(std::mt19937_64& gen, int n) {
  std::exponential_distribution<double> e(1.0);
  Vec x(n);
  for (int k = 0; k < n; ++k) x(k) = e(gen) + 1e-3;
  return x / x.sum();
}

bool in_union(const std::vector<ConvexCompactSet>& sets, const Vec& x) {
  for (const auto& s : sets) {
    if (s.contains(x, kFeasTol)) return true;
  }
  return false;
}

// Membership in the level-set union agrees with the direct inequality, up to
// boundary slack.
template <class Sampler>
void check_levels(const NConvexFunction& f, double a, Sampler sample, int count = 200) {
  const auto geq = f.level_geq(a);
  const auto leq = f.level_leq(a);
  CHECK(static_cast<int>(geq.size()) <= f.N());
  CHECK(static_cast<int>(leq.size()) <= f.N());
  for (int t = 0; t < count; ++t) {
    const Vec x = sample();
    const double v = f.eval(x);
    const double slack = 1e-6 * (1.0 + std::abs(a));
    if (v >= a) CHECK(in_union(geq, x));
    if (v <= a) CHECK(in_union(leq, x));
    if (in_union(geq, x)) CHECK(v >= a - slack);
    if (in_union(leq, x)) CHECK(v <= a + slack);
  }
}

}  // namespace

TEST_CASE("affine level sets") {
  auto box = unit_box(2);
  auto f = affine_fn(box, vec({1, 0}), 0);
  CHECK(f.N() == 1);
  auto geq = f.level_geq(0.5);
  REQUIRE(geq.size() == 1);
  CHECK(geq[0].contains(vec({0.7, 0.2})));
  CHECK_FALSE(geq[0].contains(vec({0.3, 0.2})));
  CHECK(f.level_geq(2).empty());
  auto leq = f.level_leq(0);
  REQUIRE(leq.size() == 1);
  CHECK(leq[0].lp_minimize(vec({-1, 0})).value == doctest::Approx(0.0));
  std::mt19937_64 gen(1);
  for (double a : {-0.5, 0.0, 0.3, 1.0, 1.5}) check_levels(f, a, [&] { return uniform_box(gen, 2); });
}

TEST_CASE("linear-fractional hazard rate") {
  const int M = 5, j = 1;
  auto simplex = ConvexCompactSet::simplex(M);
  Vec g = Vec::Zero(M), h = Vec::Zero(M);
  g(j) = 1;
  h.tail(M - j).setOnes();
  auto s = linear_fractional(simplex.with_inequalities(-Mat::Identity(M, M),
                                                       Vec::Constant(M, -0.01)),
                             g, 0, h, 0);
  CHECK(s.eval(Vec::Constant(M, 1.0 / M)) == doctest::Approx(0.25));
  g.setZero();
  g(0) = 1;
  h.setOnes();
  auto s1 = linear_fractional(simplex, g, 0, h, 0);
  CHECK(s1.eval(Vec::Constant(M, 1.0 / M)) == doctest::Approx(1.0 / M));
  // level_leq(a) = {x_0 <= a sum x}
  auto leq = s1.level_leq(0.3);
  REQUIRE(leq.size() == 1);
  CHECK(leq[0].contains(vec({0.3, 0.2, 0.2, 0.2, 0.1})));
  CHECK_FALSE(leq[0].contains(vec({0.31, 0.19, 0.2, 0.2, 0.1})));
  std::mt19937_64 gen(2);
  for (double a : {0.05, 0.2, 0.5, 0.9}) check_levels(s, a, [&] {
    Vec x = dirichlet(gen, M);
    return Vec((x.array() * (1 - 0.01 * M) + 0.01).matrix());
  });

  // Constant denominator reduces to affine.
  auto box = unit_box(2);
  auto lf = linear_fractional(box, vec({2, 1}), 0.5, Vec::Zero(2), 1.0);
  auto af = affine_fn(box, vec({2, 1}), 0.5);
  Vec p = vec({0.3, 0.8});
  CHECK(lf.eval(p) == doctest::Approx(af.eval(p)));
  CHECK_THROWS_AS(linear_fractional(box, vec({1, 0}), 0, vec({1, 0}), 0), Error);
  try {
    linear_fractional(box, vec({1, 0}), 0, vec({1, 0}), 0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDenominatorNotPositive);
  }
}

TEST_CASE("max, min and negate") {
  auto box = unit_box(2);
  auto x1 = affine_fn(box, vec({1, 0}), 0);
  auto x2 = affine_fn(box, vec({0, 1}), 0);
  auto f = max_of({x1, x2});
  CHECK(f.N() == 2);
  CHECK(f.level_leq(0.5).size() == 1);
  CHECK(f.level_geq(0.5).size() == 2);
  CHECK(max_of({x1}).eval(vec({0.2, 0.9})) == 0.2);
  CHECK_THROWS_AS(max_of({}), Error);
  CHECK_THROWS_AS(min_of({}), Error);

  auto n = negate(x1);
  CHECK(n.eval(vec({0.3, 0})) == -0.3);
  CHECK(n.level_geq(-0.2).size() == 1);

  auto pw = max_of({affine_fn(box, vec({1, -1}), 0.1),
                    min_of({affine_fn(box, vec({-1, 2}), 0), affine_fn(box, vec({0.5, 0.5}), -0.2)})});
  CHECK(pw.N() == 3);
  std::mt19937_64 gen(3);
  auto sample = [&] { return uniform_box(gen, 2); };
  for (double a : {-0.5, 0.0, 0.2, 0.6}) {
    check_levels(f, a, sample);
    check_levels(pw, a, sample);
    check_levels(min_of({x1, x2, affine_fn(box, vec({1, 1}), -0.5)}), a, sample);
    check_levels(negate(pw), a, sample);
  }

  auto other = affine_fn(unit_box(2).with_inequalities(vec({1, 1}).transpose(), vec({1})),
                         vec({1, 0}), 0);
  CHECK_THROWS_AS(max_of({x1, other}), Error);
}

TEST_CASE("regularized quantile") {
  const Vec S = vec({1, 2});
  const Vec q = vec({0.5, 0.5});
  CHECK(regularized_quantile(S, q, 0.0) == 1.0);
  CHECK(regularized_quantile(S, q, 0.5) == 1.0);
  CHECK(regularized_quantile(S, q, 0.75) == doctest::Approx(1.5));
  CHECK(regularized_quantile(S, q, 1.0) == doctest::Approx(2.0));
  const Vec S4 = vec({0, 1, 3, 4});
  const Vec q4 = vec({0.1, 0.2, 0.3, 0.4});
  // Breakpoints (F_k, s_k).
  CHECK(regularized_quantile(S4, q4, 0.3) == doctest::Approx(1.0));
  CHECK(regularized_quantile(S4, q4, 0.6) == doctest::Approx(3.0));
  CHECK(regularized_quantile(S4, q4, 0.45) == doctest::Approx(2.0));
  CHECK_THROWS_AS(regularized_quantile(S, vec({0.5, 0.6}), 0.5), Error);
  CHECK_THROWS_AS(regularized_quantile(S, vec({1.0, 0.0}), 0.5), Error);
  try {
    regularized_quantile(S, vec({1.0, 0.0}), 0.5);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kBadDistribution);
  }
}

TEST_CASE("quantile level identity") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 200; ++t) {
    const int M = 2 + t % 5;
    Vec S(M);
    S(0) = u(gen);
    for (int k = 1; k < M; ++k) S(k) = S(k - 1) + 0.1 + u(gen);
    const Vec r = dirichlet(gen, M);
    const double s = S(0) + (S(M - 1) - S(0)) * (0.001 + 0.999 * u(gen));
    const double gamma = quantile_level(S, r, s);
    CHECK(regularized_quantile(S, r, gamma) == doctest::Approx(s).epsilon(1e-10));
  }
}

TEST_CASE("conditional quantile level sets") {
  const Vec S = vec({0, 1, 2.5});
  const std::vector<int> T{7, 9};
  const int dim = 6;
  auto domain = ConvexCompactSet::simplex(dim).with_inequalities(-Mat::Identity(dim, dim),
                                                                Vec::Constant(dim, -0.01));
  auto f = conditional_quantile(domain, S, T, 9, 0.4);
  CHECK(f.N() == 1);
  CHECK(f.level_leq(3.0).size() == 1);
  CHECK(f.level_geq(3.0).empty());
  CHECK(f.level_leq(-0.1).empty());
  CHECK(f.level_geq(-0.1).size() == 1);
  CHECK_THROWS_AS(conditional_quantile(domain, S, T, 8, 0.4), Error);

  std::mt19937_64 gen(5);
  auto sample = [&] {
    Vec x = dirichlet(gen, dim);
    return Vec((x.array() * (1 - 0.01 * dim) + 0.01).matrix());
  };
  // Direct oracle on 50 draws.
  for (int t = 0; t < 50; ++t) {
    const Vec p = sample();
    Vec q(3);
    for (int mu = 0; mu < 3; ++mu) q(mu) = p(mu * 2 + 1);
    q /= q.sum();
    CHECK(f.eval(p) == doctest::Approx(regularized_quantile(S, q, 0.4)));
  }
  for (double s : {-0.5, 0.0, 0.3, 1.0, 1.7, 2.5, 3.0}) check_levels(f, s, sample);
  for (double alpha : {0.0, 0.05, 0.95, 1.0}) {
    auto fa = conditional_quantile(domain, S, T, 7, alpha);
    for (double s : {0.0, 0.5, 2.0}) check_levels(fa, s, sample);
  }
}

TEST_CASE("expression tree round trip") {
  auto box = unit_box(2);
  auto f = max_of({affine_fn(box, vec({1, -1}), 0.1),
                   min_of({linear_fractional(box, vec({1, 0}), 0, vec({0, 1}), 1),
                           negate(affine_fn(box, vec({0.5, 0.5}), -0.2))})});
  const json j = to_json(f);
  auto back = nconvex_from_json(j, box);
  CHECK(to_json(back) == j);
  std::mt19937_64 gen(6);
  for (int t = 0; t < 20; ++t) {
    const Vec x = uniform_box(gen, 2);
    CHECK(back.eval(x) == f.eval(x));
  }
  CHECK_THROWS_AS(nconvex_from_json(json{{"op", "sqrt"}}, box), Error);
}
