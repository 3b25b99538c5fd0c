#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

#include "doctest.h"
#include "mmest/error.hpp"
#include "mmest/harness.hpp"
#include "mmest/rng.hpp"

using namespace mmest;

namespace {

ErrorCode config_code(const json& j) {
  try {
    config_from_json(j);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;
}

ExperimentConfig small_linear() {
  return config_from_json(json{{"experiment", "linear_gaussian_singletons"},
                               {"n", 4},
                               {"m", 3},
                               {"I", 2},
                               {"instances", 2},
                               {"K", {1}},
                               {"trials", 6},
                               {"seed", 7}});
}

ExperimentConfig small_hazard() {
  return config_from_json(json{{"experiment", "hazard_bisection"},
                               {"K", {1000}},
                               {"theta", {0.9}},
                               {"trials", 6},
                               {"seed", 7}});
}

}  // namespace

TEST_CASE("config parsing rejects unknown keys and bad values") {
  CHECK(config_code({{"experiment", "hazard_bisection"}, {"bogus", 1}}) == ErrorCode::kConfig);
  CHECK(config_code({{"experiment", "nope"}}) == ErrorCode::kConfig);
  CHECK(config_code(json::array()) == ErrorCode::kConfig);
  CHECK(config_code({{"trials", 3}}) == ErrorCode::kConfig);
  CHECK(config_code({{"experiment", "hazard_bisection"}, {"theta", {1.5}}}) ==
        ErrorCode::kConfig);
  CHECK(config_code({{"experiment", "hazard_bisection"}, {"j", 13}}) == ErrorCode::kConfig);
  CHECK(config_code({{"experiment", "linear_gaussian_singletons"}, {"K", {0}}}) ==
        ErrorCode::kConfig);
  CHECK(config_code({{"experiment", "linear_gaussian_singletons"}, {"epsilon", "x"}}) ==
        ErrorCode::kConfig);
  // Keys of the other experiment are unknown here.
  CHECK(config_code({{"experiment", "linear_gaussian_singletons"}, {"theta", {0.5}}}) ==
        ErrorCode::kConfig);
}

TEST_CASE("config defaults and round trip") {
  const auto lin = config_from_json({{"experiment", "linear_gaussian_singletons"}});
  CHECK(lin.linear.n == 20);
  CHECK(lin.linear.m == 10);
  CHECK(lin.linear.I == 100);
  CHECK(lin.epsilon == doctest::Approx(0.01));
  CHECK(lin.K == std::vector<int>{1, 10, 100, 1000});
  const auto haz = config_from_json({{"experiment", "hazard_bisection"}});
  CHECK(haz.hazard.M == 12);
  CHECK(haz.K == std::vector<int>{100, 1000, 10000});
  for (const auto& c : {lin, haz}) {
    CHECK(to_json(config_from_json(to_json(c))) == to_json(c));
  }
}

TEST_CASE("random matrix has unit spectral norm") {
  Rng rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    const Mat A = random_unit_norm_matrix(10, 20, rng);
    Eigen::JacobiSVD<Mat> svd(A);
    CHECK(svd.singularValues()(0) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("hazard setup") {
  const int M = 12;
  const Mat A = hazard_matrix(M, 0.0);
  for (int i = 1; i <= M; ++i) {
    for (int r = 1; r <= M; ++r) CHECK(A(r - 1, i - 1) == doctest::Approx(r <= i ? 1.0 / i : 0.0));
  }
  // theta I + (1 - theta) R keeps columns stochastic.
  const Mat B = hazard_matrix(M, 0.3);
  CHECK((B.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-14);

  const Vec uniform = Vec::Constant(M, 1.0 / M);
  CHECK(hazard_signal_set(M).contains(uniform));
  CHECK(hazard_problem(M, 1, 0.9, 100, 0.1).f.eval(uniform) == doctest::Approx(1.0 / 12));
  CHECK(hazard_problem(M, 6, 0.9, 100, 0.1).f.eval(uniform) == doctest::Approx(1.0 / 7));

  Rng rng(5);
  const auto X = hazard_signal_set(M);
  for (int k = 0; k < 20; ++k) CHECK(X.contains(random_point(X, rng)));
}

TEST_CASE("linear runner is deterministic across runs and thread counts") {
  auto c = small_linear();
  const std::string first = records_to_csv(run_experiment(c));
  CHECK(first == records_to_csv(run_experiment(c)));
  c.threads = 4;
  CHECK(first == records_to_csv(run_experiment(c)));
  const auto table = parse_csv(first);
  CHECK(table.rows.size() == 2u * 6u);
  c.seed = 8;
  CHECK(first != records_to_csv(run_experiment(c)));
}

TEST_CASE("hazard runner is deterministic and reports the initial localizer") {
  auto c = small_hazard();
  const auto records = run_experiment(c);
  const std::string first = records_to_csv(records);
  c.threads = 3;
  CHECK(first == records_to_csv(run_experiment(c)));
  REQUIRE(records.size() == 6u);
  for (const auto& r : records) {
    CHECK(r.init_halfwidth > 0.0);
    CHECK(r.rho <= r.init_halfwidth);
    CHECK(r.group == "0.90000000000000002");
    CHECK(!r.termination.empty());
  }
}

TEST_CASE("linear runner: median certified risk falls with K") {
  auto c = config_from_json(json{{"experiment", "linear_gaussian_singletons"},
                                 {"n", 6},
                                 {"m", 4},
                                 {"I", 8},
                                 {"instances", 5},
                                 {"K", {1, 10, 100, 1000}},
                                 {"trials", 1}});
  const auto stats = box_stats(parse_csv(records_to_csv(run_experiment(c))), "rho", "K");
  REQUIRE(stats.size() == 4u);
  for (size_t k = 1; k < stats.size(); ++k) CHECK(stats[k].median <= stats[k - 1].median);
}

TEST_CASE("csv parsing") {
  const auto t = parse_csv("# csv-schema: v1\na,b\n1,2\r\n3,\n");
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2u);
  CHECK(t.rows[1][1].empty());
  CHECK(t.column("b") == 1);
  CHECK_THROWS_AS(t.column("c"), Error);
  CHECK_THROWS_AS(parse_csv("a,b\n1,2,3\n"), Error);
  CHECK_THROWS_AS(parse_csv("# only a comment\n"), Error);
  CHECK_THROWS_AS(box_stats(parse_csv("k,v\n1,x\n"), "v", "k"), Error);
}

TEST_CASE("box statistics and boxplot") {
  SUBCASE("constant group gives a degenerate box") {
    const auto s = box_stats(parse_csv("k,v\na,2\na,2\na,2\n"), "v", "k");
    REQUIRE(s.size() == 1u);
    CHECK(s[0].min == 2.0);
    CHECK(s[0].q1 == 2.0);
    CHECK(s[0].median == 2.0);
    CHECK(s[0].q3 == 2.0);
    CHECK(s[0].max == 2.0);
    CHECK(emit_boxplot(parse_csv("k,v\na,2\na,2\n"), "v", "k").find("<g class=\"box\"") !=
          std::string::npos);
  }
  SUBCASE("quartiles interpolate order statistics") {
    const auto s = box_stats(parse_csv("k,v\na,5\na,1\na,3\na,2\na,4\n"), "v", "k");
    CHECK(s[0].q1 == 2.0);
    CHECK(s[0].median == 3.0);
    CHECK(s[0].q3 == 4.0);
    CHECK(s[0].count == 5u);
  }
  SUBCASE("groups ordered by numeric key") {
    const auto table = parse_csv("K,v\n100,1\n9,2\n100,3\n9,4\n");
    const auto s = box_stats(table, "v", "K");
    REQUIRE(s.size() == 2u);
    CHECK(s[0].key == "9");
    CHECK(s[1].key == "100");
    const std::string svg = emit_boxplot(table, "v", "K", "demo");
    CHECK(svg == emit_boxplot(table, "v", "K", "demo"));
    const auto first = svg.find("data-key=\"9\"");
    const auto second = svg.find("data-key=\"100\"");
    REQUIRE(first != std::string::npos);
    REQUIRE(second != std::string::npos);
    CHECK(first < second);
  }
  SUBCASE("non-numeric keys sort lexicographically") {
    const auto s = box_stats(parse_csv("g,v\nb,1\na,2\n"), "v", "g");
    CHECK(s[0].key == "a");
  }
}
