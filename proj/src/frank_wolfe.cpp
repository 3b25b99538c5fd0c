// Away-step Frank-Wolfe (Wolfe 1970; Lacoste-Julien & Jaggi 2015) with a
// line search along each direction, plus a periodic Newton step over the
// weights of the active vertices. Plain away steps zigzag when the maximizer
// sits inside a face; the corrective step converges fast once the face is found.

#include "mmest/frank_wolfe.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>

#include "mmest/error.hpp"

namespace mmest {
namespace {

constexpr int kCorrectiveEvery = 1;
constexpr size_t kMaxCorrectiveVertices = 64;

struct ActiveVertex {
  Vec point;
  double weight;
};

// Root of the decreasing directional derivative on [0, t_max], by
// Illinois-modified regula falsi.
double derivative_line_search(const ConcaveObjective& f, const Vec& x, const Vec& d,
                              double t_max) {
  auto slope = [&](double t) { return f.gradient(x + t * d).dot(d); };
  double lo = 0.0, hi = t_max;
  double f_lo = slope(lo);
  if (f_lo <= 0.0) return 0.0;
  double f_hi = slope(hi);
  if (f_hi >= 0.0) return t_max;
  int side = 0;
  double t = hi;
  for (int it = 0; it < 80; ++it) {
    t = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    if (!(t > lo && t < hi)) t = 0.5 * (lo + hi);
    const double ft = slope(t);
    if (std::abs(ft) <= 1e-14 * std::abs(f_lo) || hi - lo <= 1e-15 * t_max) break;
    if (ft > 0.0) {
      lo = t;
      f_lo = ft;
      if (side == 1) f_hi *= 0.5;
      side = 1;
    } else {
      hi = t;
      f_hi = ft;
      if (side == -1) f_lo *= 0.5;
      side = -1;
    }
  }
  return t;
}

// Newton step on the convex hull of the active vertices. Directions are
// v_k - x, the Hessian in those coordinates comes from finite differences of
// the gradient, and the step is cut so all weights stay nonnegative.
bool corrective_newton_step(const ConcaveObjective& f, std::vector<ActiveVertex>& active, Vec& x) {
  const Eigen::Index m = static_cast<Eigen::Index>(active.size());
  Mat D(x.size(), m);
  for (Eigen::Index k = 0; k < m; ++k) D.col(k) = active[static_cast<size_t>(k)].point - x;
  const Vec grad = f.gradient(x);
  const Vec a = D.transpose() * grad;
  if (a.lpNorm<Eigen::Infinity>() <= 0.0) return false;
  constexpr double kFdStep = 1e-5;
  Mat H(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    H.col(k) = D.transpose() * (f.gradient(x + kFdStep * D.col(k)) - grad) / kFdStep;
  }
  H = 0.5 * (H + H.transpose());
  const Mat negH = -H;
  const double reg = 1e-6 * (1.0 + negH.diagonal().cwiseAbs().maxCoeff());
  const Vec c = (negH + reg * Mat::Identity(m, m)).completeOrthogonalDecomposition().solve(a);
  if (!c.allFinite() || a.dot(c) <= 0.0) return false;
  // Weights along the step: w_k(t) = w_k (1 - t S) + t c_k.
  const double S = c.sum();
  double t_max = 4.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const double w = active[static_cast<size_t>(k)].weight;
    const double rate = c(k) - w * S;
    if (rate < 0.0) t_max = std::min(t_max, -w / rate);
  }
  if (t_max <= 0.0) return false;
  const Vec direction = D * c;
  const double t = derivative_line_search(f, x, direction, t_max);
  if (t <= 0.0) return false;
  x += t * direction;
  std::vector<ActiveVertex> kept;
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto& v = active[static_cast<size_t>(k)];
    const double w = v.weight * (1.0 - t * S) + t * c(k);
    if (w > 1e-15) kept.push_back({v.point, w});
  }
  double total = 0.0;
  for (const auto& v : kept) total += v.weight;
  for (auto& v : kept) v.weight /= total;
  active = std::move(kept);
  // Recompute x from the weights so the representation stays exact.
  x.setZero();
  for (const auto& v : active) x += v.weight * v.point;
  return true;
}

bool same_point(const Vec& a, const Vec& b) {
  return (a - b).lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + b.lpNorm<Eigen::Infinity>());
}

}  // namespace

LpSolution lp_minimize(std::span<const ConvexCompactSet> blocks, const Vec& cost) {
  Eigen::Index total = 0;
  for (const auto& b : blocks) total += b.dim();
  if (cost.size() != total) throw Error(ErrorCode::kInvalidArgument, "cost dimension mismatch");
  LpSolution out;
  out.point.resize(total);
  Eigen::Index offset = 0;
  for (const auto& b : blocks) {
    LpSolution part = b.lp_minimize(cost.segment(offset, b.dim()));
    out.point.segment(offset, b.dim()) = part.point;
    out.value += part.value;
    offset += b.dim();
  }
  return out;
}

FwResult fw_maximize(const ConcaveObjective& objective, const ConvexCompactSet& set,
                     const FwOptions& options) {
  return fw_maximize(objective, std::span<const ConvexCompactSet>(&set, 1), options);
}

FwResult fw_maximize(const ConcaveObjective& objective, std::span<const ConvexCompactSet> blocks,
                     const FwOptions& options) {
  Eigen::Index total = 0;
  for (const auto& b : blocks) total += b.dim();

  std::vector<ActiveVertex> active;
  Vec x = lp_minimize(blocks, Vec::Zero(total)).point;
  active.push_back({x, 1.0});

  FwResult result;
  for (int it = 0; it <= options.max_iters; ++it) {
    const double fx = objective.value(x);
    const Vec grad = objective.gradient(x);
    const Vec s = lp_minimize(blocks, -grad).point;
    const double fw_gap = std::max(0.0, grad.dot(s - x));

    result.x = x;
    result.value = fx;
    result.gap = fw_gap;
    result.iterations = it;
    if (fw_gap <= options.tol * (1.0 + std::abs(fx))) {
      result.converged = true;
      return result;
    }
    if (it == options.max_iters) break;

    size_t away_idx = 0;
    double away_gap = -1.0;
    if (options.away_steps && active.size() > 1) {
      double worst = grad.dot(active[0].point);
      for (size_t k = 1; k < active.size(); ++k) {
        const double v = grad.dot(active[k].point);
        if (v < worst) {
          worst = v;
          away_idx = k;
        }
      }
      away_gap = grad.dot(x) - worst;
    }

    bool fw_step = away_gap <= fw_gap;
    Vec direction;
    double t_max;
    if (fw_step) {
      direction = s - x;
      t_max = 1.0;
    } else {
      direction = x - active[away_idx].point;
      const double w = active[away_idx].weight;
      t_max = w / (1.0 - w);
    }
    double t = 0.0;
    if (auto exact = objective.exact_step(x, direction, t_max)) {
      t = std::clamp(*exact, 0.0, t_max);
    } else {
      t = derivative_line_search(objective, x, direction, t_max);
    }
    if (t <= 0.0) {
      // No progress possible along the chosen direction; fall back to a short
      // FW step so the iteration does not stall on a degenerate away step.
      if (!fw_step) {
        fw_step = true;
        direction = s - x;
        t_max = 1.0;
        t = derivative_line_search(objective, x, direction, t_max);
      }
      if (t <= 0.0) {
        result.converged = fw_gap <= options.tol * (1.0 + std::abs(fx)) * 10.0;
        return result;
      }
    }
    x += t * direction;

    if (fw_step) {
      if (t >= 1.0) {
        active.clear();
        active.push_back({s, 1.0});
        x = s;
      } else {
        for (auto& v : active) v.weight *= (1.0 - t);
        auto it_same = std::find_if(active.begin(), active.end(),
                                    [&](const ActiveVertex& v) { return same_point(v.point, s); });
        if (it_same != active.end()) {
          it_same->weight += t;
        } else {
          active.push_back({s, t});
        }
      }
    } else {
      for (auto& v : active) v.weight *= (1.0 + t);
      active[away_idx].weight -= t;
      if (t >= t_max || active[away_idx].weight <= 1e-15) {
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(away_idx));
      }
    }
    if (options.away_steps && it % kCorrectiveEvery == 0 && active.size() > 1 &&
        active.size() <= kMaxCorrectiveVertices) {
      corrective_newton_step(objective, active, x);
    }
  }
  return result;
}

}  // namespace mmest
