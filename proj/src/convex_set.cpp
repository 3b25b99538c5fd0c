#include "mmest/convex_set.hpp"

#include <cmath>
#include <string>

#include "mmest/error.hpp"
#include "simplex.hpp"

namespace mmest {

ConvexCompactSet::ConvexCompactSet(Mat A, Vec b, Mat C, Vec d, Vec lo, Vec hi)
    : A_(std::move(A)), b_(std::move(b)), C_(std::move(C)), d_(std::move(d)), lo_(std::move(lo)),
      hi_(std::move(hi)) {
  const Eigen::Index n = lo_.size();
  if (hi_.size() != n) throw Error(ErrorCode::kInvalidArgument, "lo/hi size mismatch");
  if (A_.rows() == 0 && A_.cols() == 0) A_.resize(0, n);
  if (C_.rows() == 0 && C_.cols() == 0) C_.resize(0, n);
  if (A_.cols() != n || b_.size() != A_.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "inequality block has inconsistent shape");
  }
  if (C_.cols() != n || d_.size() != C_.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "equality block has inconsistent shape");
  }
  prepare(true);
}

ConvexCompactSet::ConvexCompactSet(Unchecked, Mat A, Vec b, Mat C, Vec d, Vec lo, Vec hi)
    : A_(std::move(A)), b_(std::move(b)), C_(std::move(C)), d_(std::move(d)), lo_(std::move(lo)),
      hi_(std::move(hi)) {
  prepare(false);
}

void ConvexCompactSet::prepare(bool check_bounded) {
  lp_ = std::make_shared<const detail::PreparedLp>(
      detail::PreparedLp::build(A_, b_, C_, d_, lo_, hi_));
  if (!check_bounded || lp_->empty) return;
  for (Eigen::Index j = 0; j < dim(); ++j) {
    if (std::isfinite(lo_(j)) && std::isfinite(hi_(j))) continue;
    Vec e = Vec::Zero(dim());
    e(j) = 1.0;
    try {
      lp_->minimize(e);
      lp_->minimize(-e);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kUnbounded) throw;
      throw Error(ErrorCode::kUnbounded, "set is unbounded along coordinate " + std::to_string(j));
    }
  }
}

ConvexCompactSet ConvexCompactSet::box(const Vec& lo, const Vec& hi) {
  return ConvexCompactSet(Mat(0, lo.size()), Vec(0), Mat(0, lo.size()), Vec(0), lo, hi);
}

ConvexCompactSet ConvexCompactSet::point(const Vec& x) { return box(x, x); }

ConvexCompactSet ConvexCompactSet::simplex(Eigen::Index dim) {
  return ConvexCompactSet(Mat(0, dim), Vec(0), Mat::Ones(1, dim), Vec::Ones(1), Vec::Zero(dim),
                          Vec::Constant(dim, kInf));
}

bool ConvexCompactSet::is_empty() const { return lp_->empty; }

bool ConvexCompactSet::is_point() const { return (lo_.array() == hi_.array()).all(); }

LpSolution ConvexCompactSet::lp_minimize(const Vec& cost) const { return lp_->minimize(cost); }

ConvexCompactSet ConvexCompactSet::intersect(const ConvexCompactSet& other) const {
  if (other.dim() != dim()) throw Error(ErrorCode::kInvalidArgument, "dimension mismatch");
  Mat A(A_.rows() + other.A_.rows(), dim());
  A << A_, other.A_;
  Vec b(b_.size() + other.b_.size());
  b << b_, other.b_;
  Mat C(C_.rows() + other.C_.rows(), dim());
  C << C_, other.C_;
  Vec d(d_.size() + other.d_.size());
  d << d_, other.d_;
  return ConvexCompactSet(Unchecked{}, std::move(A), std::move(b), std::move(C), std::move(d),
                          lo_.cwiseMax(other.lo_), hi_.cwiseMin(other.hi_));
}

ConvexCompactSet ConvexCompactSet::with_inequalities(const Mat& rows, const Vec& rhs) const {
  if (rows.cols() != dim() || rows.rows() != rhs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "inequality block has inconsistent shape");
  }
  Mat A(A_.rows() + rows.rows(), dim());
  A << A_, rows;
  Vec b(b_.size() + rhs.size());
  b << b_, rhs;
  return ConvexCompactSet(Unchecked{}, std::move(A), std::move(b), C_, d_, lo_, hi_);
}

ConvexCompactSet ConvexCompactSet::with_equalities(const Mat& rows, const Vec& rhs) const {
  if (rows.cols() != dim() || rows.rows() != rhs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "equality block has inconsistent shape");
  }
  Mat C(C_.rows() + rows.rows(), dim());
  C << C_, rows;
  Vec d(d_.size() + rhs.size());
  d << d_, rhs;
  return ConvexCompactSet(Unchecked{}, A_, b_, std::move(C), std::move(d), lo_, hi_);
}

bool ConvexCompactSet::contains(const Vec& x, double tol) const {
  if (x.size() != dim()) return false;
  if (((x - lo_).array() < -tol).any() || ((x - hi_).array() > tol).any()) return false;
  if (A_.rows() > 0 && ((A_ * x - b_).array() > tol).any()) return false;
  if (C_.rows() > 0 && ((C_ * x - d_).array().abs() > tol).any()) return false;
  return true;
}

LpSolution lp_minimize(const ConvexCompactSet& set, const Vec& cost) {
  return set.lp_minimize(cost);
}

bool is_empty(const ConvexCompactSet& set) { return set.is_empty(); }

ConvexCompactSet cartesian_product(const ConvexCompactSet& first,
                                   const ConvexCompactSet& second) {
  return ConvexCompactSet::product(first, second);
}

ConvexCompactSet ConvexCompactSet::product(const ConvexCompactSet& first,
                                           const ConvexCompactSet& second) {
  const Eigen::Index n1 = first.dim();
  const Eigen::Index n2 = second.dim();
  Mat A = Mat::Zero(first.A().rows() + second.A().rows(), n1 + n2);
  A.topLeftCorner(first.A().rows(), n1) = first.A();
  A.bottomRightCorner(second.A().rows(), n2) = second.A();
  Vec b(first.b().size() + second.b().size());
  b << first.b(), second.b();
  Mat C = Mat::Zero(first.C().rows() + second.C().rows(), n1 + n2);
  C.topLeftCorner(first.C().rows(), n1) = first.C();
  C.bottomRightCorner(second.C().rows(), n2) = second.C();
  Vec d(first.d().size() + second.d().size());
  d << first.d(), second.d();
  Vec lo(n1 + n2), hi(n1 + n2);
  lo << first.lo(), second.lo();
  hi << first.hi(), second.hi();
  return ConvexCompactSet(Unchecked{}, std::move(A), std::move(b), std::move(C), std::move(d),
                          std::move(lo), std::move(hi));
}

namespace {

json bound_to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v(i))) {
      out.push_back(v(i));
    } else {
      out.push_back(v(i) > 0 ? "inf" : "-inf");
    }
  }
  return out;
}

Vec bound_from_json(const json& j, Eigen::Index dim, double missing) {
  if (j.is_null()) return Vec::Constant(dim, missing);
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    const json& e = j[i];
    if (e.is_string()) {
      const std::string s = e.get<std::string>();
      if (s == "inf") v(i) = kInf;
      else if (s == "-inf") v(i) = -kInf;
      else throw Error(ErrorCode::kInvalidArgument, "bad bound literal: " + s);
    } else if (e.is_null()) {
      v(i) = missing;
    } else {
      v(i) = e.get<double>();
    }
  }
  if (v.size() != dim) throw Error(ErrorCode::kInvalidArgument, "bound vector has wrong size");
  return v;
}

}  // namespace

json to_json(const ConvexCompactSet& set) {
  return json{{"dim", set.dim()},
              {"A", to_json(set.A())},
              {"b", to_json(set.b())},
              {"C", to_json(set.C())},
              {"d", to_json(set.d())},
              {"lo", bound_to_json(set.lo())},
              {"hi", bound_to_json(set.hi())}};
}

ConvexCompactSet convex_set_from_json(const json& j) {
  const auto dim = j.at("dim").get<Eigen::Index>();
  auto block = [&](const char* key) {
    return j.contains(key) ? mat_from_json(j.at(key), dim) : Mat(0, dim);
  };
  auto rhs = [&](const char* key) { return j.contains(key) ? vec_from_json(j.at(key)) : Vec(0); };
  return ConvexCompactSet(block("A"), rhs("b"), block("C"), rhs("d"),
                          bound_from_json(j.value("lo", json()), dim, -kInf),
                          bound_from_json(j.value("hi", json()), dim, kInf));
}

}  // namespace mmest
