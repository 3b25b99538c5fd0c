#pragma once

#include <vector>

#include "mmest/affinity.hpp"
#include "mmest/frank_wolfe.hpp"

namespace mmest {

// Estimate g^T x from K observations drawn from p_{A_l(x)} with x in X_l for
// an unknown l.
struct LinearProblem {
  ObservationScheme scheme;
  int K = 1;
  std::vector<ConvexCompactSet> sets;
  std::vector<AffineMap> maps;
  Vec g;
  double epsilon = 0.05;

  int I() const { return static_cast<int>(sets.size()); }
  // ln(2I / epsilon)
  double theta() const;
  ParamSet param_set(int l) const { return {sets[static_cast<size_t>(l)], maps[static_cast<size_t>(l)]}; }
  // Shapes, epsilon range and A_l(X_l) inside the parameter domain.
  void validate() const;
};

struct EstimatorOptions {
  // alpha is searched in [1 / r_cap, r_cap].
  double r_cap = 1e6;
  // Golden-section search stops once the ln(alpha) bracket is this narrow.
  double log_alpha_tol = 1e-7;
  FwOptions fw;
  int threads = 1;
};

// Value of a max over X_l computed by Frank-Wolfe: `value` is attained at x,
// `upper` = value + gap bounds the true maximum from above.
struct MaxValue {
  double value = 0.0;
  double upper = 0.0;
  Vec x;
};

// max_{x in X_l} [K alpha Phi(phi / alpha; A_l x) - g^T x] + alpha theta
MaxValue psi_plus(const LinearProblem& problem, int l, double alpha, const Detector& phi,
                  const FwOptions& options = {});
// max_{x in X_l} [K alpha Phi(-phi / alpha; A_l x) + g^T x] + alpha theta
MaxValue psi_minus(const LinearProblem& problem, int l, double alpha, const Detector& phi,
                   const FwOptions& options = {});

struct OptResult {
  // -inf when even the most similar pair violates the affinity constraint.
  double opt = 0.0;
  bool feasible = true;
  Vec x, y;
};

// max { 1/2 g^T (y - x) : x in X_i, y in X_j, K ln affinity(A_i x, A_j y) + theta >= 0 },
// by bisection on the level t of 1/2 g^T (y - x). When infeasible, (x, y) is
// the maximal-affinity pair.
OptResult opt_ij(const LinearProblem& problem, int i, int j, const FwOptions& options = {});

enum class PairStatus { kFeasible, kHellingerInfeasible };

struct PairSolution {
  double alpha = 1.0;
  Detector phi;
  double psi_plus = 0.0;   // certified upper bound on Psi_{i,+}(alpha, phi)
  double psi_minus = 0.0;  // certified upper bound on Psi_{j,-}(alpha, phi)
  double rho = 0.0;
  double kappa = 0.0;
};

// phi = alpha * (1/2) ln(p_{A_j y} / p_{A_i x}) with alpha minimizing
// Psi_ij(alpha, phi) over [1/r_cap, r_cap] by golden-section search in ln alpha.
PairSolution feasible_pair_solution(const LinearProblem& problem, int i, int j, const Vec& x,
                                    const Vec& y, const EstimatorOptions& options = {});

struct PairEntry {
  PairStatus status = PairStatus::kFeasible;
  double opt = 0.0;
  double alpha = 1.0;
  Detector phi;
  double kappa = 0.0;
  double rho = 0.0;
};

struct LinearEstimator {
  int I = 0;
  int K = 1;
  double epsilon = 0.05;
  // Row-major I x I.
  std::vector<PairEntry> pairs;
  // rho_l = max_j max(rho_lj, rho_jl)
  Vec rho_i;
  // max_ij rho_ij, the epsilon-risk certificate.
  double rho = 0.0;

  const PairEntry& pair(int i, int j) const { return pairs[static_cast<size_t>(i * I + j)]; }
};

LinearEstimator build_estimator(const LinearProblem& problem, const EstimatorOptions& options = {});

// Closed-form construction for Gaussian singletons X_i = {x_i} with images
// y_i = A_i(x_i), using the detector phi = 0 (alpha = 1/R) on pairs with
// ||y_i - y_j|| <= 2 sqrt(2 theta / K) and phi = -R (y_i - y_j)/||.||
// (alpha = sqrt(K / (2 theta)) R) otherwise.
LinearEstimator build_gaussian_singleton_estimator(const std::vector<Vec>& xs,
                                                   const std::vector<Vec>& ys, const Vec& g, int K,
                                                   double epsilon, double R);

// Assembles rho_i and rho from the pair table.
void finalize_estimator(LinearEstimator& est);

// 1/2 [min_i max_j g_ij(obs) + max_j min_i g_ij(obs)] with
// g_ij(obs) = sum_t phi_ij(omega_t) + kappa_ij.
double estimate(const LinearEstimator& est, const Observation& obs);
// Same combination rule applied to a given matrix of g_ij values.
double combine_pair_values(const Mat& values);

// 2 ln(2I/eps) / ln(1 / (4 eps (1 - eps))), eps in (0, 1/2).
double near_optimality_factor(double epsilon, int I);
// Smallest integer K with K > near_optimality_factor(epsilon, I) * K_bar.
int inflated_observation_count(double epsilon, int I, int K_bar);

json to_json(const LinearEstimator& est);
LinearEstimator linear_estimator_from_json(const json& j);

}  // namespace mmest
