// Dense two-phase simplex with Bland's rule. Problem sizes in this library are
// tiny (a few hundred columns at most), so the tableau is kept dense.

#include "simplex.hpp"

#include <cmath>
#include <string>

#include "mmest/error.hpp"

namespace mmest::detail {
namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kReducedCostTol = 1e-11;
constexpr int kMaxPivots = 200000;

void pivot(RowMat& T, Vec& obj, std::vector<int>& basis, Eigen::Index row, Eigen::Index col) {
  T.row(row) /= T(row, col);
  for (Eigen::Index r = 0; r < T.rows(); ++r) {
    if (r == row) continue;
    const double factor = T(r, col);
    if (factor != 0.0) T.row(r) -= factor * T.row(row);
  }
  const double factor = obj(col);
  if (factor != 0.0) obj -= factor * T.row(row).transpose();
  basis[row] = static_cast<int>(col);
}

enum class Outcome { kOptimal, kUnbounded };

// Runs simplex iterations on columns [0, allowed). obj holds reduced costs with
// obj(last) = -objective.
Outcome iterate(RowMat& T, Vec& obj, std::vector<int>& basis, Eigen::Index allowed) {
  const Eigen::Index rhs = T.cols() - 1;
  for (int it = 0; it < kMaxPivots; ++it) {
    Eigen::Index entering = -1;
    for (Eigen::Index j = 0; j < allowed; ++j) {
      if (obj(j) < -kReducedCostTol) {
        entering = j;
        break;
      }
    }
    if (entering < 0) return Outcome::kOptimal;

    Eigen::Index leaving = -1;
    double best_ratio = 0.0;
    for (Eigen::Index i = 0; i < T.rows(); ++i) {
      const double a = T(i, entering);
      if (a <= kPivotTol) continue;
      const double ratio = T(i, rhs) / a;
      if (leaving < 0 || ratio < best_ratio - 1e-14 ||
          (ratio <= best_ratio + 1e-14 && basis[i] < basis[leaving])) {
        leaving = i;
        best_ratio = ratio;
      }
    }
    if (leaving < 0) return Outcome::kUnbounded;
    pivot(T, obj, basis, leaving, entering);
  }
  throw Error(ErrorCode::kIterationLimit, "simplex pivot limit reached");
}

Vec reduced_costs(const RowMat& T, const std::vector<int>& basis, const Vec& col_cost) {
  Vec obj = Vec::Zero(T.cols());
  obj.head(col_cost.size()) = col_cost;
  for (Eigen::Index i = 0; i < T.rows(); ++i) {
    const double cb = basis[i] < col_cost.size() ? col_cost(basis[i]) : 0.0;
    if (cb != 0.0) obj -= cb * T.row(i).transpose();
  }
  return obj;
}

}  // namespace

PreparedLp PreparedLp::build(const Mat& A, const Vec& b, const Mat& C, const Vec& d,
                             const Vec& lo, const Vec& hi) {
  PreparedLp lp;
  lp.dim = lo.size();
  lp.vars.resize(lp.dim);

  int ncols = 0;
  std::vector<std::pair<int, double>> upper_rows;  // (col, bound) for shifted vars
  for (Eigen::Index j = 0; j < lp.dim; ++j) {
    VarMap& v = lp.vars[j];
    const bool lo_fin = std::isfinite(lo(j));
    const bool hi_fin = std::isfinite(hi(j));
    if (lo_fin && hi_fin && hi(j) < lo(j)) {
      lp.empty = true;
      return lp;
    }
    if (lo_fin && hi_fin && hi(j) == lo(j)) {
      v.kind = VarKind::kFixed;
      v.offset = lo(j);
    } else if (lo_fin) {
      v.kind = VarKind::kShift;
      v.offset = lo(j);
      v.col = ncols++;
      if (hi_fin) upper_rows.emplace_back(v.col, hi(j) - lo(j));
    } else if (hi_fin) {
      v.kind = VarKind::kReflect;
      v.offset = hi(j);
      v.col = ncols++;
    } else {
      v.kind = VarKind::kFree;
      v.col = ncols++;
      v.col_neg = ncols++;
    }
  }

  const Eigen::Index n_ineq = A.rows() + static_cast<Eigen::Index>(upper_rows.size());
  const Eigen::Index n_eq = C.rows();
  const Eigen::Index m = n_ineq + n_eq;

  // Rows in z-space before slack/artificial columns.
  RowMat rows = RowMat::Zero(m, ncols);
  Vec rhs(m);
  auto substitute = [&](const auto& coeffs, double bound, Eigen::Index r) {
    double shift = 0.0;
    for (Eigen::Index j = 0; j < lp.dim; ++j) {
      const double a = coeffs(j);
      if (a == 0.0) continue;
      const VarMap& v = lp.vars[j];
      switch (v.kind) {
        case VarKind::kFixed: shift += a * v.offset; break;
        case VarKind::kShift: shift += a * v.offset; rows(r, v.col) += a; break;
        case VarKind::kReflect: shift += a * v.offset; rows(r, v.col) -= a; break;
        case VarKind::kFree: rows(r, v.col) += a; rows(r, v.col_neg) -= a; break;
      }
    }
    rhs(r) = bound - shift;
  };
  for (Eigen::Index i = 0; i < A.rows(); ++i) substitute(A.row(i), b(i), i);
  for (size_t k = 0; k < upper_rows.size(); ++k) {
    const Eigen::Index r = A.rows() + static_cast<Eigen::Index>(k);
    rows(r, upper_rows[k].first) = 1.0;
    rhs(r) = upper_rows[k].second;
  }
  for (Eigen::Index i = 0; i < n_eq; ++i) substitute(C.row(i), d(i), n_ineq + i);

  // Columns: structural | slacks | artificials | rhs.
  std::vector<bool> needs_art(m, false);
  int n_art = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    needs_art[i] = i >= n_ineq || rhs(i) < 0.0;
    if (needs_art[i]) ++n_art;
  }
  const int slack0 = ncols;
  const int art0 = slack0 + static_cast<int>(n_ineq);
  const int total = art0 + n_art;
  RowMat T = RowMat::Zero(m, total + 1);
  std::vector<int> basis(m);
  int art = art0;
  for (Eigen::Index i = 0; i < m; ++i) {
    T.row(i).head(ncols) = rows.row(i);
    if (i < n_ineq) T(i, slack0 + i) = 1.0;
    T(i, total) = rhs(i);
    if (rhs(i) < 0.0) T.row(i) *= -1.0;
    if (needs_art[i]) {
      T(i, art) = 1.0;
      basis[i] = art++;
    } else {
      basis[i] = slack0 + static_cast<int>(i);
    }
  }

  if (n_art > 0) {
    Vec phase1_cost = Vec::Zero(total);
    phase1_cost.tail(n_art).setOnes();
    Vec obj = reduced_costs(T, basis, phase1_cost);
    iterate(T, obj, basis, total);
    if (-obj(total) > kFeasTol) {
      lp.empty = true;
      return lp;
    }
    // Drive artificials out of the basis; drop redundant rows.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < T.rows(); ++i) {
      if (basis[i] < art0) {
        keep.push_back(i);
        continue;
      }
      Eigen::Index col = -1;
      double best = 1e-9;
      for (Eigen::Index j = 0; j < art0; ++j) {
        if (std::abs(T(i, j)) > best) {
          best = std::abs(T(i, j));
          col = j;
        }
      }
      if (col >= 0) {
        pivot(T, obj, basis, i, col);
        keep.push_back(i);
      }
    }
    RowMat reduced(static_cast<Eigen::Index>(keep.size()), art0 + 1);
    std::vector<int> new_basis;
    new_basis.reserve(keep.size());
    for (size_t k = 0; k < keep.size(); ++k) {
      reduced.row(static_cast<Eigen::Index>(k)).head(art0) = T.row(keep[k]).head(art0);
      reduced(static_cast<Eigen::Index>(k), art0) = T(keep[k], total);
      new_basis.push_back(basis[keep[k]]);
    }
    T = std::move(reduced);
    basis = std::move(new_basis);
  }

  lp.num_cols = art0;
  lp.tableau = std::move(T);
  lp.basis = std::move(basis);
  return lp;
}

LpSolution PreparedLp::minimize(const Vec& cost) const {
  if (empty) throw Error(ErrorCode::kInfeasible, "linear program over an empty set");
  if (cost.size() != dim) throw Error(ErrorCode::kInvalidArgument, "cost dimension mismatch");

  Vec col_cost = Vec::Zero(num_cols);
  for (Eigen::Index j = 0; j < dim; ++j) {
    const VarMap& v = vars[j];
    switch (v.kind) {
      case VarKind::kFixed: break;
      case VarKind::kShift: col_cost(v.col) += cost(j); break;
      case VarKind::kReflect: col_cost(v.col) -= cost(j); break;
      case VarKind::kFree: col_cost(v.col) += cost(j); col_cost(v.col_neg) -= cost(j); break;
    }
  }

  RowMat T = tableau;
  std::vector<int> B = basis;
  Vec obj = reduced_costs(T, B, col_cost);
  if (iterate(T, obj, B, num_cols) == Outcome::kUnbounded) {
    throw Error(ErrorCode::kUnbounded, "linear program is unbounded");
  }

  Vec z = Vec::Zero(num_cols);
  const Eigen::Index rhs = T.cols() - 1;
  for (Eigen::Index i = 0; i < T.rows(); ++i) {
    if (B[i] < num_cols) z(B[i]) = std::max(0.0, T(i, rhs));
  }
  LpSolution sol;
  sol.point.resize(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    const VarMap& v = vars[j];
    switch (v.kind) {
      case VarKind::kFixed: sol.point(j) = v.offset; break;
      case VarKind::kShift: sol.point(j) = v.offset + z(v.col); break;
      case VarKind::kReflect: sol.point(j) = v.offset - z(v.col); break;
      case VarKind::kFree: sol.point(j) = z(v.col) - z(v.col_neg); break;
    }
  }
  sol.value = cost.dot(sol.point);
  return sol;
}

}  // namespace mmest::detail
