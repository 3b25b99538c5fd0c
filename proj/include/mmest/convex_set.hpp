#pragma once

#include <limits>
#include <memory>

#include "mmest/linalg.hpp"

namespace mmest {

// Absolute feasibility tolerance. Every "is this set nonempty" decision in the
// library goes through this constant.
inline constexpr double kFeasTol = 1e-9;

namespace detail {
struct PreparedLp;
}

struct LpSolution {
  Vec point;
  double value = 0.0;
};

// Bounded polyhedron {x : A x <= b, C x = d, lo <= x <= hi}.
//
// Construction runs phase 1 of the simplex method once and keeps the feasible
// tableau, so later linear minimizations only pay for phase 2. Coordinates with
// an infinite bound are checked for boundedness eagerly; an unbounded
// description throws kUnbounded. Empty sets are representable (is_empty()).
class ConvexCompactSet {
 public:
  ConvexCompactSet(Mat A, Vec b, Mat C, Vec d, Vec lo, Vec hi);

  static ConvexCompactSet box(const Vec& lo, const Vec& hi);
  static ConvexCompactSet point(const Vec& x);
  // {x >= 0, sum x = 1}
  static ConvexCompactSet simplex(Eigen::Index dim);

  Eigen::Index dim() const { return lo_.size(); }
  const Mat& A() const { return A_; }
  const Vec& b() const { return b_; }
  const Mat& C() const { return C_; }
  const Vec& d() const { return d_; }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }

  bool is_empty() const;
  // True when lo == hi in every coordinate.
  bool is_point() const;

  // Minimizes cost^T x. Throws kInfeasible on an empty set.
  LpSolution lp_minimize(const Vec& cost) const;

  // Constraint concatenation. The result inherits boundedness, so no extra
  // checks are run.
  ConvexCompactSet intersect(const ConvexCompactSet& other) const;
  ConvexCompactSet with_inequalities(const Mat& rows, const Vec& rhs) const;
  ConvexCompactSet with_equalities(const Mat& rows, const Vec& rhs) const;

  // Cartesian product, variables concatenated in order.
  static ConvexCompactSet product(const ConvexCompactSet& first, const ConvexCompactSet& second);

  // True if x satisfies every constraint to within tol.
  bool contains(const Vec& x, double tol = 1e-7) const;

 private:
  struct Unchecked {};
  ConvexCompactSet(Unchecked, Mat A, Vec b, Mat C, Vec d, Vec lo, Vec hi);
  void prepare(bool check_bounded);

  Mat A_;
  Vec b_;
  Mat C_;
  Vec d_;
  Vec lo_;
  Vec hi_;
  std::shared_ptr<const detail::PreparedLp> lp_;
};

LpSolution lp_minimize(const ConvexCompactSet& set, const Vec& cost);
bool is_empty(const ConvexCompactSet& set);

// Cartesian product X_1 x ... x X_k, variables concatenated in order.
ConvexCompactSet cartesian_product(const ConvexCompactSet& first, const ConvexCompactSet& second);

json to_json(const ConvexCompactSet& set);
ConvexCompactSet convex_set_from_json(const json& j);

}  // namespace mmest
