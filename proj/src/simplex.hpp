#pragma once

#include <vector>

#include <Eigen/Core>

#include "mmest/convex_set.hpp"

namespace mmest::detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A polyhedron brought to standard form {z >= 0, T z = rhs} with a feasible
// basis already found by phase 1. Fixed coordinates are substituted out.
struct PreparedLp {
  enum class VarKind { kFixed, kShift, kReflect, kFree };
  struct VarMap {
    VarKind kind = VarKind::kFixed;
    double offset = 0.0;
    int col = -1;      // kShift/kReflect/kFree
    int col_neg = -1;  // kFree only
  };

  Eigen::Index dim = 0;
  std::vector<VarMap> vars;
  bool empty = false;
  // Canonical tableau for the feasible basis: rows x (cols + 1), last column rhs.
  RowMat tableau;
  std::vector<int> basis;
  int num_cols = 0;

  static PreparedLp build(const Mat& A, const Vec& b, const Mat& C, const Vec& d, const Vec& lo,
                          const Vec& hi);

  LpSolution minimize(const Vec& cost) const;
};

}  // namespace mmest::detail
