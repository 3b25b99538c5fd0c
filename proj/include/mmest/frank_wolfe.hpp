#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mmest/convex_set.hpp"

namespace mmest {

// A smooth concave function with a gradient oracle.
class ConcaveObjective {
 public:
  virtual ~ConcaveObjective() = default;
  virtual double value(const Vec& x) const = 0;
  virtual Vec gradient(const Vec& x) const = 0;
  // argmax of t -> value(x + t d) on [0, t_max] when known in closed form
  // (quadratics). Otherwise a derivative-based line search is used.
  virtual std::optional<double> exact_step(const Vec& /*x*/, const Vec& /*d*/,
                                           double /*t_max*/) const {
    return std::nullopt;
  }
};

// Adapter for ad hoc objectives.
class FunctionObjective final : public ConcaveObjective {
 public:
  FunctionObjective(std::function<double(const Vec&)> f, std::function<Vec(const Vec&)> grad)
      : f_(std::move(f)), grad_(std::move(grad)) {}
  double value(const Vec& x) const override { return f_(x); }
  Vec gradient(const Vec& x) const override { return grad_(x); }

 private:
  std::function<double(const Vec&)> f_;
  std::function<Vec(const Vec&)> grad_;
};

struct FwOptions {
  // Stop once the Frank-Wolfe gap is <= tol * (1 + |value|).
  double tol = 1e-7;
  int max_iters = 20000;
  bool away_steps = true;
};

struct FwResult {
  Vec x;
  double value = 0.0;
  // max_s grad(x)^T (s - x) over the domain; an upper bound on the
  // suboptimality of x.
  double gap = 0.0;
  int iterations = 0;
  bool converged = false;

  // Certified upper bound on the maximum.
  double upper_bound() const { return value + gap; }
};

// Maximizes a concave objective over a product of polytopes (variables of the
// blocks concatenated in order). The linear minimization oracle decomposes
// over the blocks. Does not throw on the iteration cap: check `converged`.
FwResult fw_maximize(const ConcaveObjective& objective, std::span<const ConvexCompactSet> blocks,
                     const FwOptions& options = {});
FwResult fw_maximize(const ConcaveObjective& objective, const ConvexCompactSet& set,
                     const FwOptions& options = {});

// Linear minimization over a product of blocks.
LpSolution lp_minimize(std::span<const ConvexCompactSet> blocks, const Vec& cost);

}  // namespace mmest
