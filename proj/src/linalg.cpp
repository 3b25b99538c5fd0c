#include "mmest/linalg.hpp"

#include "mmest/error.hpp"

namespace mmest {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kUnbounded: return "Unbounded";
    case ErrorCode::kIterationLimit: return "IterationLimit";
    case ErrorCode::kParamOutOfDomain: return "ParamOutOfDomain";
    case ErrorCode::kOverflow: return "Overflow";
    case ErrorCode::kSetOutsideDomain: return "SetOutsideDomain";
    case ErrorCode::kKMismatch: return "KMismatch";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kNonPositiveEntry: return "NonPositiveEntry";
    case ErrorCode::kEpsilonOutOfRange: return "EpsilonOutOfRange";
    case ErrorCode::kEmptyList: return "EmptyList";
    case ErrorCode::kDenominatorNotPositive: return "DenominatorNotPositive";
    case ErrorCode::kBadDistribution: return "BadDistribution";
    case ErrorCode::kTauNotInT: return "TauNotInT";
    case ErrorCode::kTrivialProblem: return "TrivialProblem";
    case ErrorCode::kBothSidesInfeasible: return "BothSidesInfeasible";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Unknown";
}

json to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const Mat& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Vec vec_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kInvalidArgument, "expected a JSON array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Mat mat_from_json(const json& j, Eigen::Index cols_if_empty) {
  if (!j.is_array()) throw Error(ErrorCode::kInvalidArgument, "expected a JSON matrix");
  if (j.empty()) return Mat(0, cols_if_empty);
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::kInvalidArgument, "ragged JSON matrix");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<size_t>(c)].get<double>();
  }
  return m;
}

AffineMap AffineMap::identity(Eigen::Index dim) {
  return AffineMap{Mat::Identity(dim, dim), Vec::Zero(dim)};
}

json to_json(const AffineMap& map) { return json{{"F", to_json(map.F)}, {"f", to_json(map.f)}}; }

AffineMap affine_map_from_json(const json& j) {
  AffineMap map{mat_from_json(j.at("F")), vec_from_json(j.at("f"))};
  if (map.F.rows() != map.f.size()) {
    throw Error(ErrorCode::kInvalidArgument, "affine map offset has wrong size");
  }
  return map;
}

}  // namespace mmest
