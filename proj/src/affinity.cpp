#include "mmest/affinity.hpp"

#include <cmath>
#include <vector>

#include "mmest/error.hpp"

namespace mmest {
namespace {

constexpr double kMinDiscreteMass = 1e-12;

void require_nonempty(const ParamSet& params) {
  if (params.set.is_empty()) throw Error(ErrorCode::kInfeasible, "parameter set is empty");
  if (params.map.in_dim() != params.set.dim()) {
    throw Error(ErrorCode::kInvalidArgument, "affine map does not match the set dimension");
  }
}

// Sum over all d^K outcomes of weight(outcome) * [predicate on phi^(K)].
template <typename Fn>
double enumerate_outcomes(const PairwiseTest& test, const Vec& mu, Fn&& term) {
  if (test.detector.kind != SchemeKind::kDiscrete) {
    throw Error(ErrorCode::kInvalidArgument, "exact enumeration needs the discrete scheme");
  }
  const int d = static_cast<int>(mu.size());
  const int K = test.K;
  double count = 1.0;
  for (int t = 0; t < K; ++t) count *= d;
  if (count > 1e6) throw Error(ErrorCode::kTooLarge, "more than 1e6 outcomes to enumerate");
  const Vec& phi = test.detector.coef;
  std::vector<int> idx(K, 0);
  double total = 0.0;
  while (true) {
    double prob = 1.0, value = 0.0;
    for (int t = 0; t < K; ++t) {
      prob *= mu(idx[t]);
      value += phi(idx[t]);
    }
    total += prob * term(value);
    int t = 0;
    while (t < K && ++idx[t] == d) idx[t++] = 0;
    if (t == K) break;
  }
  return total;
}

}  // namespace

void check_inside_domain(const ObservationScheme& scheme, const ParamSet& params) {
  require_nonempty(params);
  if (params.map.out_dim() != scheme.d()) {
    throw Error(ErrorCode::kInvalidArgument, "affine map does not land in the parameter space");
  }
  if (scheme.kind() == SchemeKind::kGaussian) return;
  const Mat& F = params.map.F;
  const Vec& f = params.map.f;
  const double floor = kMinDiscreteMass;
  for (Eigen::Index i = 0; i < F.rows(); ++i) {
    const double lowest = params.set.lp_minimize(F.row(i).transpose()).value + f(i);
    const bool ok = scheme.kind() == SchemeKind::kDiscrete ? lowest >= floor : lowest > 0.0;
    if (!ok) {
      throw Error(ErrorCode::kSetOutsideDomain,
                  "parameter coordinate " + std::to_string(i) + " reaches " + std::to_string(lowest));
    }
  }
  if (scheme.kind() == SchemeKind::kDiscrete) {
    const Vec mass = F.colwise().sum().transpose();
    const double lo = params.set.lp_minimize(mass).value + f.sum();
    const double hi = -params.set.lp_minimize(-mass).value + f.sum();
    if (std::abs(lo - 1.0) > kFeasTol || std::abs(hi - 1.0) > kFeasTol) {
      throw Error(ErrorCode::kSetOutsideDomain, "parameters are not probability vectors");
    }
  }
}

double log_affinity(const ObservationScheme& scheme, const Vec& mu, const Vec& nu) {
  scheme.check_param(mu);
  scheme.check_param(nu);
  switch (scheme.kind()) {
    case SchemeKind::kGaussian: return -0.125 * (mu - nu).squaredNorm();
    case SchemeKind::kPoisson: return -0.5 * (mu.array().sqrt() - nu.array().sqrt()).square().sum();
    case SchemeKind::kDiscrete: return std::log((mu.array() * nu.array()).sqrt().sum());
  }
  return 0.0;
}

void log_affinity_grad(const ObservationScheme& scheme, const Vec& mu, const Vec& nu, Vec& grad_mu,
                       Vec& grad_nu) {
  switch (scheme.kind()) {
    case SchemeKind::kGaussian:
      grad_mu = -0.25 * (mu - nu);
      grad_nu = -grad_mu;
      return;
    case SchemeKind::kPoisson:
      grad_mu = -0.5 * (1.0 - (nu.array() / mu.array()).sqrt());
      grad_nu = -0.5 * (1.0 - (mu.array() / nu.array()).sqrt());
      return;
    case SchemeKind::kDiscrete: {
      const Eigen::ArrayXd root = (mu.array() * nu.array()).sqrt();
      const double s = root.sum();
      grad_mu = 0.5 * root / mu.array() / s;
      grad_nu = 0.5 * root / nu.array() / s;
      return;
    }
  }
}

AffinityObjective::AffinityObjective(const ObservationScheme& scheme, const AffineMap& first,
                                     const AffineMap& second, double scale)
    : scheme_(scheme), first_(first), second_(second), scale_(scale) {}

double AffinityObjective::value(const Vec& z) const {
  return scale_ * log_affinity(scheme_, first_param(z), second_param(z));
}

Vec AffinityObjective::gradient(const Vec& z) const {
  Vec gmu, gnu;
  log_affinity_grad(scheme_, first_param(z), second_param(z), gmu, gnu);
  Vec out(z.size());
  out.head(first_.in_dim()) = scale_ * (first_.F.transpose() * gmu);
  out.tail(second_.in_dim()) = scale_ * (second_.F.transpose() * gnu);
  return out;
}

std::optional<double> AffinityObjective::exact_step(const Vec& z, const Vec& d, double t_max) const {
  if (scheme_.kind() != SchemeKind::kGaussian) return std::nullopt;
  const Vec delta = first_param(z) - second_param(z);
  const Vec slope = first_.F * d.head(first_.in_dim()) - second_.F * d.tail(second_.in_dim());
  const double curvature = slope.squaredNorm();
  if (curvature <= 0.0) return t_max;
  return -delta.dot(slope) / curvature;
}

PairwiseTest solve_pair(const ObservationScheme& scheme, const ParamSet& first,
                        const ParamSet& second, int K, const FwOptions& options) {
  if (K < 1) throw Error(ErrorCode::kInvalidArgument, "K must be positive");
  check_inside_domain(scheme, first);
  check_inside_domain(scheme, second);

  PairwiseTest test;
  test.K = K;
  const Eigen::Index n1 = first.set.dim(), n2 = second.set.dim();

  // Overlapping images: affinity 1 is attained at any common point.
  Mat link(scheme.d(), n1 + n2);
  link << first.map.F, -second.map.F;
  const ConvexCompactSet common = ConvexCompactSet::product(first.set, second.set)
                                      .with_equalities(link, second.map.f - first.map.f);
  if (!common.is_empty()) {
    const Vec z = common.lp_minimize(Vec::Zero(n1 + n2)).point;
    test.x_star = z.head(n1);
    test.y_star = z.tail(n2);
    test.mu_star = first.param(test.x_star);
    test.nu_star = test.mu_star;
    test.opt = 0.0;
    test.eps_star = 1.0;
    test.detector = Detector::zero(scheme.kind(), scheme.d());
    return test;
  }

  AffinityObjective objective(scheme, first.map, second.map);
  const std::vector<ConvexCompactSet> blocks{first.set, second.set};
  const FwResult res = fw_maximize(objective, blocks, options);
  if (!res.converged) {
    throw IterationLimitError("affinity maximization did not reach its gap tolerance", res.x,
                              res.gap);
  }
  test.x_star = res.x.head(n1);
  test.y_star = res.x.tail(n2);
  test.mu_star = first.param(test.x_star);
  test.nu_star = second.param(test.y_star);
  test.opt = std::min(0.0, res.value);
  test.eps_star = std::exp(test.opt);
  test.detector = log_ratio_detector(scheme, test.mu_star, test.nu_star);
  return test;
}

PairwiseTest solve_pair(const ObservationScheme& scheme, const ConvexCompactSet& first,
                        const ConvexCompactSet& second, int K) {
  return solve_pair(scheme, ParamSet::direct(first), ParamSet::direct(second), K);
}

Hypothesis decide(const PairwiseTest& test, const Observation& obs) {
  if (obs.K() != test.K) throw Error(ErrorCode::kKMismatch, "observation K differs from test K");
  return evaluate(test.detector, obs) >= 0.0 ? Hypothesis::kH1 : Hypothesis::kH2;
}

double exact_risk_discrete(const PairwiseTest& test, const Vec& mu, Hypothesis side) {
  const double sign = side == Hypothesis::kH1 ? -1.0 : 1.0;
  return enumerate_outcomes(test, mu, [&](double phi) { return std::exp(sign * phi); });
}

double exact_error_probability_discrete(const PairwiseTest& test, const Vec& mu, Hypothesis side) {
  if (side == Hypothesis::kH1) {
    return enumerate_outcomes(test, mu, [](double phi) { return phi < 0.0 ? 1.0 : 0.0; });
  }
  return enumerate_outcomes(test, mu, [](double phi) { return phi >= 0.0 ? 1.0 : 0.0; });
}

json to_json(const PairwiseTest& test) {
  return json{{"detector", to_json(test.detector)}, {"opt", test.opt},
              {"eps_star", test.eps_star},         {"mu_star", to_json(test.mu_star)},
              {"nu_star", to_json(test.nu_star)},  {"x_star", to_json(test.x_star)},
              {"y_star", to_json(test.y_star)},    {"K", test.K}};
}

PairwiseTest pairwise_test_from_json(const json& j) {
  PairwiseTest test;
  test.detector = detector_from_json(j.at("detector"));
  test.opt = j.at("opt").get<double>();
  test.eps_star = j.at("eps_star").get<double>();
  test.mu_star = vec_from_json(j.at("mu_star"));
  test.nu_star = vec_from_json(j.at("nu_star"));
  test.x_star = vec_from_json(j.at("x_star"));
  test.y_star = vec_from_json(j.at("y_star"));
  test.K = j.at("K").get<int>();
  return test;
}

}  // namespace mmest
