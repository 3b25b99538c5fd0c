#pragma once

#include <limits>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

namespace mmest {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using json = nlohmann::json;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Row-major nested-array (de)serialization.
json to_json(const Vec& v);
json to_json(const Mat& m);
Vec vec_from_json(const json& j);
Mat mat_from_json(const json& j, Eigen::Index cols_if_empty = 0);

// x -> F x + f
struct AffineMap {
  Mat F;
  Vec f;

  static AffineMap identity(Eigen::Index dim);

  Eigen::Index in_dim() const { return F.cols(); }
  Eigen::Index out_dim() const { return F.rows(); }
  Vec operator()(const Vec& x) const { return F * x + f; }
};

json to_json(const AffineMap& map);
AffineMap affine_map_from_json(const json& j);

}  // namespace mmest
