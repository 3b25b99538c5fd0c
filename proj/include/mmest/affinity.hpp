#pragma once

#include <optional>

#include "mmest/convex_set.hpp"
#include "mmest/frank_wolfe.hpp"
#include "mmest/obs_scheme.hpp"

namespace mmest {

// The parameter set {map(x) : x in set}. Sets given directly in parameter
// space use the identity map.
struct ParamSet {
  ConvexCompactSet set;
  AffineMap map;

  static ParamSet direct(const ConvexCompactSet& set) {
    return {set, AffineMap::identity(set.dim())};
  }
  Vec param(const Vec& x) const { return map(x); }
};

// Throws kSetOutsideDomain unless map(set) lies in the scheme's parameter
// domain. Decided exactly, by linear minimization of each coordinate (and of
// the total mass for Discrete).
void check_inside_domain(const ObservationScheme& scheme, const ParamSet& params);

// Log Hellinger affinity ln \int sqrt(p_mu p_nu).
double log_affinity(const ObservationScheme& scheme, const Vec& mu, const Vec& nu);
// Gradients of log_affinity in mu and nu.
void log_affinity_grad(const ObservationScheme& scheme, const Vec& mu, const Vec& nu, Vec& grad_mu,
                       Vec& grad_nu);

// z = (x, y) -> scale * log_affinity(A1 x, A2 y), concave.
class AffinityObjective final : public ConcaveObjective {
 public:
  AffinityObjective(const ObservationScheme& scheme, const AffineMap& first,
                    const AffineMap& second, double scale = 1.0);

  double value(const Vec& z) const override;
  Vec gradient(const Vec& z) const override;
  std::optional<double> exact_step(const Vec& z, const Vec& d, double t_max) const override;

  Vec first_param(const Vec& z) const { return first_(z.head(first_.in_dim())); }
  Vec second_param(const Vec& z) const { return second_(z.tail(second_.in_dim())); }

 private:
  ObservationScheme scheme_;
  AffineMap first_;
  AffineMap second_;
  double scale_;
};

struct PairwiseTest {
  // Balanced detector phi* = 1/2 ln(p_mu* / p_nu*), zero shift.
  Detector detector;
  // Maximal log affinity for a single observation; the K-repeated test has
  // risk at most exp(K * opt).
  double opt = 0.0;
  double eps_star = 1.0;
  Vec mu_star, nu_star;
  // Preimages of mu_star / nu_star.
  Vec x_star, y_star;
  int K = 1;
};

PairwiseTest solve_pair(const ObservationScheme& scheme, const ParamSet& first,
                        const ParamSet& second, int K, const FwOptions& options = {});
PairwiseTest solve_pair(const ObservationScheme& scheme, const ConvexCompactSet& first,
                        const ConvexCompactSet& second, int K);

enum class Hypothesis { kH1, kH2 };

// H1 iff the detector is nonnegative on the observation.
Hypothesis decide(const PairwiseTest& test, const Observation& obs);

// E_mu exp(-phi^(K)) when side is kH1 and E_mu exp(+phi^(K)) for kH2, by
// enumerating all d^K outcomes. Throws kTooLarge above 1e6 outcomes.
double exact_risk_discrete(const PairwiseTest& test, const Vec& mu, Hypothesis side);
// Probability under mu that decide() rejects `side`, by the same enumeration.
double exact_error_probability_discrete(const PairwiseTest& test, const Vec& mu, Hypothesis side);

json to_json(const PairwiseTest& test);
PairwiseTest pairwise_test_from_json(const json& j);

}  // namespace mmest
