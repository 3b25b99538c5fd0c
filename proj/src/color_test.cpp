#include "mmest/color_test.hpp"

#include <cmath>
#include <limits>

#include "mmest/error.hpp"
#include "mmest/parallel.hpp"

namespace mmest {
namespace {

constexpr int kMaxPowerIterations = 10000;
constexpr double kResidualTol = 1e-12;

}  // namespace

PfResult pf_spectral(const Mat& E) {
  if (E.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty matrix");
  if (!(E.array() > 0.0).all()) {
    throw Error(ErrorCode::kNonPositiveEntry, "matrix must be entrywise positive");
  }
  PfResult out;
  // Iterate on E / max(E): entries near the risk floor would underflow when
  // squared inside norm().
  const double scale = E.maxCoeff();
  const Mat Es = E / scale;
  Vec h = Vec::Constant(E.cols(), 1.0 / std::sqrt(static_cast<double>(E.cols())));
  Vec g(E.rows());
  double sigma = 0.0;
  for (int it = 1; it <= kMaxPowerIterations; ++it) {
    g = Es * h;
    g /= g.norm();
    Vec next = Es.transpose() * g;
    sigma = next.norm();
    h = next / sigma;
    const double left = (Es * h - sigma * g).lpNorm<Eigen::Infinity>();
    const double right = (Es.transpose() * g - sigma * h).lpNorm<Eigen::Infinity>();
    out.iterations = it;
    if (left <= kResidualTol * sigma && right <= kResidualTol * sigma) {
      out.converged = true;
      break;
    }
  }
  const double tiny = std::numeric_limits<double>::min();
  out.sigma = sigma * scale;
  out.g = (g / std::sqrt(2.0)).cwiseMax(tiny);
  out.h = (h / std::sqrt(2.0)).cwiseMax(tiny);
  return out;
}

ColorTest assemble_color_test(std::vector<PairwiseTest> pairs, int b, int r, int K) {
  if (b < 1 || r < 1) throw Error(ErrorCode::kEmptyList, "color test needs blue and red sets");
  ColorTest test;
  test.K = K;
  test.b = b;
  test.r = r;
  test.pairs = std::move(pairs);
  test.E.resize(b, r);
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < r; ++j) {
      test.E(i, j) = std::max(kRiskFloor, std::exp(K * test.pair(i, j).opt));
    }
  }
  const PfResult pf = pf_spectral(test.E);
  test.eps_K = pf.sigma;
  test.g = pf.g;
  test.h = pf.h;
  test.alpha.resize(b, r);
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < r; ++j) test.alpha(i, j) = std::log(test.h(j) / test.g(i));
  }
  return test;
}

ColorTest build_color_test(const ObservationScheme& scheme, const std::vector<ParamSet>& blues,
                           const std::vector<ParamSet>& reds, int K, int threads) {
  const int b = static_cast<int>(blues.size());
  const int r = static_cast<int>(reds.size());
  if (b == 0 || r == 0) throw Error(ErrorCode::kEmptyList, "color test needs blue and red sets");
  std::vector<PairwiseTest> pairs(static_cast<size_t>(b * r));
  parallel_for(pairs.size(), threads, [&](size_t k) {
    pairs[k] = solve_pair(scheme, blues[k / static_cast<size_t>(r)],
                          reds[k % static_cast<size_t>(r)], K);
  });
  return assemble_color_test(std::move(pairs), b, r, K);
}

Color infer_color(const ColorTest& test, const Observation& obs) {
  if (obs.K() != test.K) throw Error(ErrorCode::kKMismatch, "observation K differs from test K");
  for (int i = 0; i < test.b; ++i) {
    bool row_ok = true;
    for (int j = 0; j < test.r && row_ok; ++j) {
      row_ok = evaluate(test.pair(i, j).detector, obs) - test.alpha(i, j) >= 0.0;
    }
    if (row_ok) return Color::kBlue;
  }
  return Color::kRed;
}

json to_json(const ColorTest& test) {
  json pairs = json::array();
  for (const auto& p : test.pairs) pairs.push_back(to_json(p));
  return json{{"K", test.K},         {"b", test.b},         {"r", test.r},
              {"pairs", pairs},      {"E", to_json(test.E)}, {"eps_K", test.eps_K},
              {"g", to_json(test.g)}, {"h", to_json(test.h)}, {"alpha", to_json(test.alpha)}};
}

ColorTest color_test_from_json(const json& j) {
  ColorTest test;
  test.K = j.at("K").get<int>();
  test.b = j.at("b").get<int>();
  test.r = j.at("r").get<int>();
  for (const auto& p : j.at("pairs")) test.pairs.push_back(pairwise_test_from_json(p));
  if (static_cast<int>(test.pairs.size()) != test.b * test.r) {
    throw Error(ErrorCode::kInvalidArgument, "color test pair count mismatch");
  }
  test.E = mat_from_json(j.at("E"));
  test.eps_K = j.at("eps_K").get<double>();
  test.g = vec_from_json(j.at("g"));
  test.h = vec_from_json(j.at("h"));
  test.alpha = mat_from_json(j.at("alpha"));
  return test;
}

}  // namespace mmest
