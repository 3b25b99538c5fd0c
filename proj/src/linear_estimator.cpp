#include "mmest/linear_estimator.hpp"

#include <cmath>
#include <numbers>

#include "mmest/error.hpp"
#include "mmest/parallel.hpp"

namespace mmest {
namespace {

// Tolerance of the Frank-Wolfe solves inside the level bisection for Opt_ij.
constexpr double kLevelTol = 1e-10;
constexpr int kMaxLevelSteps = 200;

// x -> K alpha Phi(sign * phi / alpha; A x) - sign * g^T x
class PsiObjective final : public ConcaveObjective {
 public:
  PsiObjective(const LinearProblem& problem, int l, double alpha, const Detector& phi, double sign)
      : scheme_(problem.scheme),
        map_(problem.maps[static_cast<size_t>(l)]),
        g_(problem.g),
        weight_(problem.K * alpha),
        sign_(sign),
        det_(phi.scaled(sign / alpha)) {
    det_.shift = 0.0;
  }

  double value(const Vec& x) const override {
    return weight_ * cumulant(scheme_, det_, map_(x)) - sign_ * g_.dot(x);
  }

  Vec gradient(const Vec& x) const override {
    return weight_ * (map_.F.transpose() * cumulant_grad_mu(scheme_, det_, map_(x))) - sign_ * g_;
  }

  std::optional<double> exact_step(const Vec& x, const Vec& d, double t_max) const override {
    // Phi is affine in mu for Gaussian and Poisson, so the objective is linear.
    if (scheme_.kind() == SchemeKind::kDiscrete) return std::nullopt;
    return gradient(x).dot(d) > 0.0 ? t_max : 0.0;
  }

 private:
  const ObservationScheme& scheme_;
  const AffineMap& map_;
  const Vec& g_;
  double weight_;
  double sign_;
  Detector det_;
};

MaxValue psi_side(const LinearProblem& problem, int l, double alpha, const Detector& phi,
                  double sign, const FwOptions& options) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be positive");
  PsiObjective objective(problem, l, alpha, phi, sign);
  const FwResult res = fw_maximize(objective, problem.sets[static_cast<size_t>(l)], options);
  if (!res.converged) {
    throw IterationLimitError("Psi maximization did not reach its gap tolerance", res.x, res.gap);
  }
  const double base = alpha * problem.theta();
  return MaxValue{res.value + base, res.upper_bound() + base, res.x};
}

}  // namespace

double LinearProblem::theta() const { return std::log(2.0 * I() / epsilon); }

void LinearProblem::validate() const {
  if (sets.empty()) throw Error(ErrorCode::kEmptyList, "linear problem needs at least one set");
  if (maps.size() != sets.size()) throw Error(ErrorCode::kInvalidArgument, "one map per set");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::kEpsilonOutOfRange, "epsilon must lie in (0, 1)");
  }
  if (K < 1) throw Error(ErrorCode::kInvalidArgument, "K must be positive");
  for (int l = 0; l < I(); ++l) {
    if (sets[static_cast<size_t>(l)].dim() != g.size()) {
      throw Error(ErrorCode::kInvalidArgument, "set dimension differs from the form dimension");
    }
    check_inside_domain(scheme, param_set(l));
  }
}

MaxValue psi_plus(const LinearProblem& problem, int l, double alpha, const Detector& phi,
                  const FwOptions& options) {
  return psi_side(problem, l, alpha, phi, 1.0, options);
}

MaxValue psi_minus(const LinearProblem& problem, int l, double alpha, const Detector& phi,
                   const FwOptions& options) {
  return psi_side(problem, l, alpha, phi, -1.0, options);
}

OptResult opt_ij(const LinearProblem& problem, int i, int j, const FwOptions& options) {
  const double theta = problem.theta();
  const ParamSet first = problem.param_set(i), second = problem.param_set(j);
  const PairwiseTest closest = solve_pair(problem.scheme, first, second, problem.K, options);

  OptResult out;
  out.x = closest.x_star;
  out.y = closest.y_star;
  if (problem.K * closest.opt + theta < 0.0) {
    out.opt = -kInf;
    out.feasible = false;
    return out;
  }

  const Eigen::Index n1 = first.set.dim(), n2 = second.set.dim();
  Mat level_row(1, n1 + n2);
  level_row << 0.5 * problem.g.transpose(), -0.5 * problem.g.transpose();
  const ConvexCompactSet joint = ConvexCompactSet::product(first.set, second.set);
  // 1/2 g^T (y - x) = -level_row z
  const LpSolution top = joint.lp_minimize(level_row.transpose());
  double lo = -level_row.row(0).dot(
      (Vec(n1 + n2) << closest.x_star, closest.y_star).finished());
  double hi = -top.value;

  AffinityObjective affinity(problem.scheme, first.map, second.map, problem.K);
  FwOptions level_options = options;
  level_options.tol = std::min(options.tol, kLevelTol);
  // Is there a pair with 1/2 g^T (y - x) >= t satisfying the constraint?
  auto reaches = [&](double t, Vec& z) {
    const ConvexCompactSet slab = joint.with_inequalities(level_row, Vec::Constant(1, -t));
    if (slab.is_empty()) return false;
    const FwResult res = fw_maximize(affinity, slab, level_options);
    if (!res.converged) {
      throw IterationLimitError("affinity maximization did not reach its gap tolerance", res.x,
                                res.gap);
    }
    z = res.x;
    return res.upper_bound() + theta >= 0.0;
  };

  Vec z;
  if (hi <= lo) {
    out.opt = lo;
    return out;
  }
  if (reaches(hi, z)) {
    out.opt = hi;
    out.x = z.head(n1);
    out.y = z.tail(n2);
    return out;
  }
  for (int step = 0; step < kMaxLevelSteps && hi - lo > 1e-11 * (1.0 + std::abs(lo) + std::abs(hi));
       ++step) {
    const double mid = 0.5 * (lo + hi);
    if (reaches(mid, z)) {
      lo = mid;
      out.x = z.head(n1);
      out.y = z.tail(n2);
    } else {
      hi = mid;
    }
  }
  out.opt = lo;
  return out;
}

PairSolution feasible_pair_solution(const LinearProblem& problem, int i, int j, const Vec& x,
                                    const Vec& y, const EstimatorOptions& options) {
  const AffineMap& Ai = problem.maps[static_cast<size_t>(i)];
  const AffineMap& Aj = problem.maps[static_cast<size_t>(j)];
  const Detector direction = log_ratio_detector(problem.scheme, Aj(y), Ai(x));

  auto solve_at = [&](double u) {
    const double alpha = std::exp(u);
    PairSolution s;
    s.alpha = alpha;
    s.phi = direction.scaled(alpha);
    s.psi_plus = psi_plus(problem, i, alpha, s.phi, options.fw).upper;
    s.psi_minus = psi_minus(problem, j, alpha, s.phi, options.fw).upper;
    s.rho = 0.5 * (s.psi_plus + s.psi_minus);
    s.kappa = 0.5 * (s.psi_minus - s.psi_plus);
    return s;
  };

  // Psi_ij is convex along the ray, hence unimodal in ln(alpha).
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = -std::log(options.r_cap), b = std::log(options.r_cap);
  PairSolution best_lo = solve_at(a), best_hi = solve_at(b);
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  PairSolution fc = solve_at(c), fd = solve_at(d);
  while (b - a > options.log_alpha_tol) {
    if (fc.rho <= fd.rho) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = solve_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = solve_at(d);
    }
  }
  PairSolution best = fc.rho <= fd.rho ? fc : fd;
  if (best_lo.rho < best.rho) best = best_lo;
  if (best_hi.rho < best.rho) best = best_hi;
  return best;
}

LinearEstimator build_estimator(const LinearProblem& problem, const EstimatorOptions& options) {
  problem.validate();
  const int I = problem.I();
  LinearEstimator est;
  est.I = I;
  est.K = problem.K;
  est.epsilon = problem.epsilon;
  est.pairs.resize(static_cast<size_t>(I * I));
  parallel_for(est.pairs.size(), options.threads, [&](size_t k) {
    const int i = static_cast<int>(k) / I, j = static_cast<int>(k) % I;
    const OptResult opt = opt_ij(problem, i, j, options.fw);
    const PairSolution sol = feasible_pair_solution(problem, i, j, opt.x, opt.y, options);
    PairEntry& e = est.pairs[k];
    e.status = opt.feasible ? PairStatus::kFeasible : PairStatus::kHellingerInfeasible;
    e.opt = opt.opt;
    e.alpha = sol.alpha;
    e.phi = sol.phi;
    e.kappa = sol.kappa;
    e.rho = sol.rho;
  });
  finalize_estimator(est);
  return est;
}

LinearEstimator build_gaussian_singleton_estimator(const std::vector<Vec>& xs,
                                                   const std::vector<Vec>& ys, const Vec& g, int K,
                                                   double epsilon, double R) {
  if (xs.empty() || xs.size() != ys.size()) {
    throw Error(ErrorCode::kInvalidArgument, "need one image per singleton");
  }
  const int I = static_cast<int>(xs.size());
  const double theta = std::log(2.0 * I / epsilon);
  const double threshold = 2.0 * std::sqrt(2.0 * theta / K);
  LinearEstimator est;
  est.I = I;
  est.K = K;
  est.epsilon = epsilon;
  est.pairs.resize(static_cast<size_t>(I * I));
  for (int i = 0; i < I; ++i) {
    for (int j = 0; j < I; ++j) {
      PairEntry& e = est.pairs[static_cast<size_t>(i * I + j)];
      const Vec diff = ys[i] - ys[j];
      const double dist = diff.norm();
      const double half_gap = 0.5 * g.dot(xs[j] - xs[i]);
      e.phi = Detector::zero(SchemeKind::kGaussian, static_cast<int>(diff.size()));
      if (dist <= threshold) {
        e.status = PairStatus::kFeasible;
        e.opt = half_gap;
        e.alpha = 1.0 / R;
        e.kappa = 0.5 * g.dot(xs[i] + xs[j]);
        e.rho = half_gap + theta / R;
      } else {
        e.status = PairStatus::kHellingerInfeasible;
        e.opt = -kInf;
        e.phi.coef = -R * diff / dist;
        e.alpha = std::sqrt(K / (2.0 * theta)) * R;
        e.kappa = 0.5 * g.dot(xs[i] + xs[j]) - 0.5 * K * e.phi.coef.dot(ys[i] + ys[j]);
        e.rho = half_gap + (std::sqrt(2.0 * K * theta) - 0.5 * K * dist) * R;
      }
    }
  }
  finalize_estimator(est);
  return est;
}

void finalize_estimator(LinearEstimator& est) {
  est.rho_i = Vec::Constant(est.I, -kInf);
  est.rho = -kInf;
  for (int i = 0; i < est.I; ++i) {
    for (int j = 0; j < est.I; ++j) {
      const double r = est.pair(i, j).rho;
      est.rho_i(i) = std::max(est.rho_i(i), r);
      est.rho_i(j) = std::max(est.rho_i(j), r);
      est.rho = std::max(est.rho, r);
    }
  }
}

double combine_pair_values(const Mat& values) {
  const double min_r = values.rowwise().maxCoeff().minCoeff();
  const double max_c = values.colwise().minCoeff().maxCoeff();
  return 0.5 * (min_r + max_c);
}

double estimate(const LinearEstimator& est, const Observation& obs) {
  if (obs.K() != est.K) throw Error(ErrorCode::kKMismatch, "observation K differs from estimator K");
  Mat values(est.I, est.I);
  for (int i = 0; i < est.I; ++i) {
    for (int j = 0; j < est.I; ++j) {
      const PairEntry& e = est.pair(i, j);
      values(i, j) = evaluate(e.phi, obs) + e.kappa;
    }
  }
  return combine_pair_values(values);
}

double near_optimality_factor(double epsilon, int I) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw Error(ErrorCode::kEpsilonOutOfRange, "epsilon must lie in (0, 1/2)");
  }
  return 2.0 * std::log(2.0 * I / epsilon) / std::log(1.0 / (4.0 * epsilon * (1.0 - epsilon)));
}

int inflated_observation_count(double epsilon, int I, int K_bar) {
  return static_cast<int>(std::floor(near_optimality_factor(epsilon, I) * K_bar)) + 1;
}

namespace {

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

double number_or_infinity(const json& j) {
  if (j.is_string()) return j.get<std::string>() == "inf" ? kInf : -kInf;
  return j.get<double>();
}

}  // namespace

json to_json(const LinearEstimator& est) {
  json pairs = json::array();
  for (const auto& e : est.pairs) {
    pairs.push_back(json{{"status", e.status == PairStatus::kFeasible ? "feasible" : "hellinger_infeasible"},
                         {"opt", finite_or_string(e.opt)},
                         {"alpha", e.alpha},
                         {"phi", to_json(e.phi)},
                         {"kappa", e.kappa},
                         {"rho", e.rho}});
  }
  return json{{"I", est.I}, {"K", est.K}, {"epsilon", est.epsilon}, {"rho", est.rho},
              {"pairs", pairs}};
}

LinearEstimator linear_estimator_from_json(const json& j) {
  LinearEstimator est;
  est.I = j.at("I").get<int>();
  est.K = j.at("K").get<int>();
  est.epsilon = j.at("epsilon").get<double>();
  for (const auto& p : j.at("pairs")) {
    PairEntry e;
    e.status = p.at("status").get<std::string>() == "feasible" ? PairStatus::kFeasible
                                                              : PairStatus::kHellingerInfeasible;
    e.opt = number_or_infinity(p.at("opt"));
    e.alpha = p.at("alpha").get<double>();
    e.phi = detector_from_json(p.at("phi"));
    e.kappa = p.at("kappa").get<double>();
    e.rho = p.at("rho").get<double>();
    est.pairs.push_back(std::move(e));
  }
  if (static_cast<int>(est.pairs.size()) != est.I * est.I) {
    throw Error(ErrorCode::kInvalidArgument, "estimator pair count mismatch");
  }
  finalize_estimator(est);
  return est;
}

}  // namespace mmest
