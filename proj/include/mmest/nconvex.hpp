#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mmest/convex_set.hpp"

namespace mmest {

// Polyhedral piece {x : A x <= b}, kept separate from the domain until a level
// set is materialized.
struct HalfspacePiece {
  Mat A;
  Vec b;
};

namespace detail {
class NConvexNode;
}

// A function on a polytope domain whose level sets {f >= a} and {f <= a}
// each split into at most N() convex polytopes. Cheap to copy.
class NConvexFunction {
 public:
  explicit NConvexFunction(std::shared_ptr<const detail::NConvexNode> node);

  int N() const;
  const ConvexCompactSet& domain() const;
  // "affine", "linear_fractional", "negate", "max", "min", "conditional_quantile"
  std::string kind() const;
  double eval(const Vec& x) const;

  // Nonempty members of {x in domain : f(x) >= a}, already intersected with
  // the domain. An empty list means the level set is empty.
  std::vector<ConvexCompactSet> level_geq(double a) const;
  std::vector<ConvexCompactSet> level_leq(double a) const;

  // Raw pieces before intersection with the domain and pruning.
  std::vector<HalfspacePiece> pieces_geq(double a) const;
  std::vector<HalfspacePiece> pieces_leq(double a) const;

  const detail::NConvexNode& node() const { return *node_; }

 private:
  std::shared_ptr<const detail::NConvexNode> node_;
};

// f(x) = g^T x + c.
NConvexFunction affine_fn(const ConvexCompactSet& domain, const Vec& g, double c);
// f(x) = (g^T x + g0) / (h^T x + h0). Throws kDenominatorNotPositive unless
// the denominator stays above kFeasTol on the domain.
NConvexFunction linear_fractional(const ConvexCompactSet& domain, const Vec& g, double g0,
                                  const Vec& h, double h0);
NConvexFunction negate(const NConvexFunction& f);
// All arguments must share a domain. Throws kEmptyList on no arguments.
NConvexFunction max_of(const std::vector<NConvexFunction>& fs);
NConvexFunction min_of(const std::vector<NConvexFunction>& fs);

// Regularized alpha-quantile: atom q_1 at s_1, mass q_k spread uniformly over
// [s_{k-1}, s_k] for k >= 2. Throws kBadDistribution unless q > 0 sums to 1.
double regularized_quantile(const Vec& S, const Vec& q, double alpha);
// The unique gamma with regularized_quantile(S, r, gamma) == s, for
// s in (s_1, s_M].
double quantile_level(const Vec& S, const Vec& r, double s);

// Regularized alpha-quantile of the conditional law of s given t = tau, as a
// function of a joint distribution p on S x T. p is stored row-major with
// p(mu, t) at index mu * |T| + t.
NConvexFunction conditional_quantile(const ConvexCompactSet& domain, const Vec& S,
                                     const std::vector<int>& T, int tau, double alpha);

// Expression tree without the domain; the domain is supplied when loading.
json to_json(const NConvexFunction& f);
NConvexFunction nconvex_from_json(const json& j, const ConvexCompactSet& domain);

}  // namespace mmest
