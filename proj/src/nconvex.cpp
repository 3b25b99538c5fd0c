#include "mmest/nconvex.hpp"

#include <algorithm>
#include <cmath>

#include "mmest/error.hpp"

namespace mmest {
namespace detail {

class NConvexNode {
 public:
  explicit NConvexNode(ConvexCompactSet domain) : domain_(std::move(domain)) {}
  virtual ~NConvexNode() = default;
  virtual int N() const = 0;
  virtual std::string kind() const = 0;
  virtual double eval(const Vec& x) const = 0;
  virtual std::vector<HalfspacePiece> geq(double a) const = 0;
  virtual std::vector<HalfspacePiece> leq(double a) const = 0;
  virtual json to_json() const = 0;
  const ConvexCompactSet& domain() const { return domain_; }

 private:
  ConvexCompactSet domain_;
};

}  // namespace detail

namespace {

using detail::NConvexNode;

HalfspacePiece whole(Eigen::Index n) { return {Mat(0, n), Vec(0)}; }

HalfspacePiece single_row(const Vec& row, double rhs) {
  HalfspacePiece p{row.transpose(), Vec::Constant(1, rhs)};
  return p;
}

HalfspacePiece merge(const HalfspacePiece& x, const HalfspacePiece& y) {
  HalfspacePiece out{Mat(x.A.rows() + y.A.rows(), x.A.cols()), Vec(x.b.size() + y.b.size())};
  out.A << x.A, y.A;
  out.b << x.b, y.b;
  return out;
}

bool same_set(const ConvexCompactSet& x, const ConvexCompactSet& y) {
  auto eq = [](const auto& u, const auto& v) {
    return u.rows() == v.rows() && u.cols() == v.cols() && (u.array() == v.array()).all();
  };
  return x.dim() == y.dim() && eq(x.A(), y.A()) && eq(x.b(), y.b()) && eq(x.C(), y.C()) &&
         eq(x.d(), y.d()) && eq(x.lo(), y.lo()) && eq(x.hi(), y.hi());
}

class AffineNode final : public NConvexNode {
 public:
  AffineNode(ConvexCompactSet domain, Vec g, double c)
      : NConvexNode(std::move(domain)), g_(std::move(g)), c_(c) {}
  int N() const override { return 1; }
  std::string kind() const override { return "affine"; }
  double eval(const Vec& x) const override { return g_.dot(x) + c_; }
  // -g^T x <= c - a
  std::vector<HalfspacePiece> geq(double a) const override { return {single_row(-g_, c_ - a)}; }
  std::vector<HalfspacePiece> leq(double a) const override { return {single_row(g_, a - c_)}; }
  json to_json() const override {
    return {{"op", "affine"}, {"g", mmest::to_json(g_)}, {"c", c_}};
  }

 private:
  Vec g_;
  double c_;
};

class FractionalNode final : public NConvexNode {
 public:
  FractionalNode(ConvexCompactSet domain, Vec g, double g0, Vec h, double h0)
      : NConvexNode(std::move(domain)), g_(std::move(g)), g0_(g0), h_(std::move(h)), h0_(h0) {}
  int N() const override { return 1; }
  std::string kind() const override { return "linear_fractional"; }
  double eval(const Vec& x) const override { return (g_.dot(x) + g0_) / (h_.dot(x) + h0_); }
  // g^T x + g0 - a (h^T x + h0) >= 0
  std::vector<HalfspacePiece> geq(double a) const override {
    return {single_row(a * h_ - g_, g0_ - a * h0_)};
  }
  std::vector<HalfspacePiece> leq(double a) const override {
    return {single_row(g_ - a * h_, a * h0_ - g0_)};
  }
  json to_json() const override {
    return {{"op", "linear_fractional"}, {"g", mmest::to_json(g_)}, {"g0", g0_},
            {"h", mmest::to_json(h_)},   {"h0", h0_}};
  }

 private:
  Vec g_;
  double g0_;
  Vec h_;
  double h0_;
};

class NegateNode final : public NConvexNode {
 public:
  explicit NegateNode(NConvexFunction f) : NConvexNode(f.domain()), f_(std::move(f)) {}
  int N() const override { return f_.N(); }
  std::string kind() const override { return "negate"; }
  double eval(const Vec& x) const override { return -f_.eval(x); }
  std::vector<HalfspacePiece> geq(double a) const override { return f_.pieces_leq(-a); }
  std::vector<HalfspacePiece> leq(double a) const override { return f_.pieces_geq(-a); }
  json to_json() const override { return {{"op", "negate"}, {"arg", mmest::to_json(f_)}}; }
  const NConvexFunction& arg() const { return f_; }

 private:
  NConvexFunction f_;
};

class MaxNode final : public NConvexNode {
 public:
  explicit MaxNode(std::vector<NConvexFunction> fs)
      : NConvexNode(fs.front().domain()), fs_(std::move(fs)) {}
  int N() const override {
    long prod = 1, sum = 0;
    for (const auto& f : fs_) {
      prod = std::min<long>(prod * f.N(), 1L << 30);
      sum += f.N();
    }
    return static_cast<int>(std::max(prod, sum));
  }
  std::string kind() const override { return "max"; }
  double eval(const Vec& x) const override {
    double v = -kInf;
    for (const auto& f : fs_) v = std::max(v, f.eval(x));
    return v;
  }
  std::vector<HalfspacePiece> geq(double a) const override {
    std::vector<HalfspacePiece> out;
    for (const auto& f : fs_) {
      for (auto& p : f.pieces_geq(a)) out.push_back(std::move(p));
    }
    return out;
  }
  // Intersection of unions, expanded one argument at a time with empty
  // partial products dropped as soon as they appear.
  std::vector<HalfspacePiece> leq(double a) const override {
    std::vector<HalfspacePiece> acc{whole(domain().dim())};
    for (const auto& f : fs_) {
      const auto next = f.pieces_leq(a);
      std::vector<HalfspacePiece> expanded;
      for (const auto& p : acc) {
        for (const auto& q : next) {
          HalfspacePiece m = merge(p, q);
          if (!domain().with_inequalities(m.A, m.b).is_empty()) expanded.push_back(std::move(m));
        }
      }
      acc = std::move(expanded);
      if (acc.empty()) break;
    }
    return acc;
  }
  json to_json() const override {
    json args = json::array();
    for (const auto& f : fs_) args.push_back(mmest::to_json(f));
    return {{"op", "max"}, {"args", args}};
  }

 private:
  std::vector<NConvexFunction> fs_;
};

// Serializes as "min" but evaluates as -max(-f_i).
class MinNode final : public NConvexNode {
 public:
  MinNode(std::vector<NConvexFunction> fs, NConvexFunction inner)
      : NConvexNode(inner.domain()), fs_(std::move(fs)), inner_(std::move(inner)) {}
  int N() const override { return inner_.N(); }
  std::string kind() const override { return "min"; }
  double eval(const Vec& x) const override { return inner_.eval(x); }
  std::vector<HalfspacePiece> geq(double a) const override { return inner_.pieces_geq(a); }
  std::vector<HalfspacePiece> leq(double a) const override { return inner_.pieces_leq(a); }
  json to_json() const override {
    json args = json::array();
    for (const auto& f : fs_) args.push_back(mmest::to_json(f));
    return {{"op", "min"}, {"args", args}};
  }

 private:
  std::vector<NConvexFunction> fs_;
  NConvexFunction inner_;
};

class QuantileNode final : public NConvexNode {
 public:
  QuantileNode(ConvexCompactSet domain, Vec S, std::vector<int> T, int tau, double alpha)
      : NConvexNode(std::move(domain)), S_(std::move(S)), T_(std::move(T)), tau_(tau),
        alpha_(alpha) {
    const auto it = std::find(T_.begin(), T_.end(), tau_);
    if (it == T_.end()) throw Error(ErrorCode::kTauNotInT, "tau is not a label in T");
    col_ = static_cast<Eigen::Index>(it - T_.begin());
    if (S_.size() < 1) throw Error(ErrorCode::kInvalidArgument, "S is empty");
    for (Eigen::Index k = 1; k < S_.size(); ++k) {
      if (!(S_(k) > S_(k - 1))) throw Error(ErrorCode::kInvalidArgument, "S must be increasing");
    }
    if (!(alpha_ >= 0.0 && alpha_ <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
    }
    if (NConvexNode::domain().dim() != S_.size() * static_cast<Eigen::Index>(T_.size())) {
      throw Error(ErrorCode::kInvalidArgument, "domain dimension must be |S| * |T|");
    }
  }
  int N() const override { return 1; }
  std::string kind() const override { return "conditional_quantile"; }
  double eval(const Vec& x) const override {
    Vec q = column(x);
    q /= q.sum();
    return regularized_quantile(S_, q, alpha_);
  }
  std::vector<HalfspacePiece> geq(double s) const override {
    const Eigen::Index M = S_.size();
    if (s <= S_(0)) return {whole(domain().dim())};
    if (s > S_(M - 1)) return {};
    // gamma(p) <= alpha G_M(p)
    return {single_row(gamma_row(s) - alpha_ * cumulative_row(M), 0.0)};
  }
  std::vector<HalfspacePiece> leq(double s) const override {
    const Eigen::Index M = S_.size();
    if (s < S_(0)) return {};
    if (s > S_(M - 1)) return {whole(domain().dim())};
    // At s = s_1: G_1(p) >= alpha G_M(p).
    const Vec row = s == S_(0) ? cumulative_row(1) : gamma_row(s);
    return {single_row(alpha_ * cumulative_row(M) - row, 0.0)};
  }
  json to_json() const override {
    return {{"op", "conditional_quantile"}, {"S", mmest::to_json(S_)}, {"T", T_},
            {"tau", tau_}, {"alpha", alpha_}};
  }

 private:
  Vec column(const Vec& x) const {
    const Eigen::Index M = S_.size(), nt = static_cast<Eigen::Index>(T_.size());
    Vec q(M);
    for (Eigen::Index mu = 0; mu < M; ++mu) q(mu) = x(mu * nt + col_);
    return q;
  }
  // Coefficients of G_{tau, m}(p) = sum_{iota <= m} p(iota, tau).
  Vec cumulative_row(Eigen::Index m) const {
    const Eigen::Index nt = static_cast<Eigen::Index>(T_.size());
    Vec row = Vec::Zero(domain().dim());
    for (Eigen::Index mu = 0; mu < m; ++mu) row(mu * nt + col_) = 1.0;
    return row;
  }
  // Coefficients of the interpolated cumulative for s in (s_1, s_M].
  Vec gamma_row(double s) const {
    Eigen::Index k = 1;
    while (S_(k) < s) ++k;  // s_{k-1} < s <= s_k, zero-based
    const double lo = S_(k - 1), hi = S_(k);
    return ((hi - s) * cumulative_row(k) + (s - lo) * cumulative_row(k + 1)) / (hi - lo);
  }

  Vec S_;
  std::vector<int> T_;
  int tau_;
  double alpha_;
  Eigen::Index col_ = 0;
};

void check_distribution(const Vec& S, const Vec& q) {
  if (q.size() != S.size() || q.size() == 0) {
    throw Error(ErrorCode::kBadDistribution, "distribution size does not match S");
  }
  if ((q.array() <= 0.0).any()) throw Error(ErrorCode::kBadDistribution, "q must be positive");
  if (std::abs(q.sum() - 1.0) > 1e-9) throw Error(ErrorCode::kBadDistribution, "q must sum to 1");
  for (Eigen::Index k = 1; k < S.size(); ++k) {
    if (!(S(k) > S(k - 1))) throw Error(ErrorCode::kInvalidArgument, "S must be increasing");
  }
}

}  // namespace

NConvexFunction::NConvexFunction(std::shared_ptr<const detail::NConvexNode> node)
    : node_(std::move(node)) {}

int NConvexFunction::N() const { return node_->N(); }
const ConvexCompactSet& NConvexFunction::domain() const { return node_->domain(); }
std::string NConvexFunction::kind() const { return node_->kind(); }
double NConvexFunction::eval(const Vec& x) const { return node_->eval(x); }
std::vector<HalfspacePiece> NConvexFunction::pieces_geq(double a) const { return node_->geq(a); }
std::vector<HalfspacePiece> NConvexFunction::pieces_leq(double a) const { return node_->leq(a); }

namespace {

std::vector<ConvexCompactSet> materialize(const ConvexCompactSet& domain,
                                          const std::vector<HalfspacePiece>& pieces) {
  std::vector<ConvexCompactSet> out;
  for (const auto& p : pieces) {
    ConvexCompactSet s = domain.with_inequalities(p.A, p.b);
    if (!s.is_empty()) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::vector<ConvexCompactSet> NConvexFunction::level_geq(double a) const {
  return materialize(domain(), pieces_geq(a));
}

std::vector<ConvexCompactSet> NConvexFunction::level_leq(double a) const {
  return materialize(domain(), pieces_leq(a));
}

NConvexFunction affine_fn(const ConvexCompactSet& domain, const Vec& g, double c) {
  if (g.size() != domain.dim()) throw Error(ErrorCode::kInvalidArgument, "g has wrong size");
  return NConvexFunction(std::make_shared<AffineNode>(domain, g, c));
}

NConvexFunction linear_fractional(const ConvexCompactSet& domain, const Vec& g, double g0,
                                  const Vec& h, double h0) {
  if (g.size() != domain.dim() || h.size() != domain.dim()) {
    throw Error(ErrorCode::kInvalidArgument, "coefficient vector has wrong size");
  }
  if (domain.is_empty()) throw Error(ErrorCode::kInfeasible, "empty domain");
  if (domain.lp_minimize(h).value + h0 <= kFeasTol) {
    throw Error(ErrorCode::kDenominatorNotPositive, "denominator is not positive on the domain");
  }
  return NConvexFunction(std::make_shared<FractionalNode>(domain, g, g0, h, h0));
}

NConvexFunction negate(const NConvexFunction& f) {
  return NConvexFunction(std::make_shared<NegateNode>(f));
}

NConvexFunction max_of(const std::vector<NConvexFunction>& fs) {
  if (fs.empty()) throw Error(ErrorCode::kEmptyList, "max_of needs at least one function");
  for (const auto& f : fs) {
    if (!same_set(f.domain(), fs.front().domain())) {
      throw Error(ErrorCode::kInvalidArgument, "max_of arguments must share a domain");
    }
  }
  if (fs.size() == 1) return fs.front();
  return NConvexFunction(std::make_shared<MaxNode>(fs));
}

NConvexFunction min_of(const std::vector<NConvexFunction>& fs) {
  if (fs.empty()) throw Error(ErrorCode::kEmptyList, "min_of needs at least one function");
  if (fs.size() == 1) return fs.front();
  std::vector<NConvexFunction> negated;
  for (const auto& f : fs) negated.push_back(negate(f));
  return NConvexFunction(std::make_shared<MinNode>(fs, negate(max_of(negated))));
}

double regularized_quantile(const Vec& S, const Vec& q, double alpha) {
  check_distribution(S, q);
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
  }
  double F = q(0);
  if (alpha <= F) return S(0);
  for (Eigen::Index k = 1; k < S.size(); ++k) {
    const double next = F + q(k);
    if (alpha <= next || k == S.size() - 1) {
      const double t = std::clamp((alpha - F) / q(k), 0.0, 1.0);
      return S(k - 1) + t * (S(k) - S(k - 1));
    }
    F = next;
  }
  return S(S.size() - 1);
}

double quantile_level(const Vec& S, const Vec& r, double s) {
  check_distribution(S, r);
  const Eigen::Index M = S.size();
  if (!(s > S(0) && s <= S(M - 1))) {
    throw Error(ErrorCode::kInvalidArgument, "s must lie in (s_1, s_M]");
  }
  Eigen::Index k = 1;
  while (S(k) < s) ++k;
  const double Fk = r.head(k).sum(), Fk1 = r.head(k + 1).sum();
  return ((S(k) - s) * Fk + (s - S(k - 1)) * Fk1) / (S(k) - S(k - 1));
}

NConvexFunction conditional_quantile(const ConvexCompactSet& domain, const Vec& S,
                                     const std::vector<int>& T, int tau, double alpha) {
  return NConvexFunction(std::make_shared<QuantileNode>(domain, S, T, tau, alpha));
}

json to_json(const NConvexFunction& f) { return f.node().to_json(); }

NConvexFunction nconvex_from_json(const json& j, const ConvexCompactSet& domain) {
  const std::string op = j.at("op").get<std::string>();
  auto args = [&] {
    std::vector<NConvexFunction> out;
    for (const auto& a : j.at("args")) out.push_back(nconvex_from_json(a, domain));
    return out;
  };
  if (op == "affine") return affine_fn(domain, vec_from_json(j.at("g")), j.value("c", 0.0));
  if (op == "linear_fractional") {
    return linear_fractional(domain, vec_from_json(j.at("g")), j.value("g0", 0.0),
                             vec_from_json(j.at("h")), j.value("h0", 0.0));
  }
  if (op == "negate") return negate(nconvex_from_json(j.at("arg"), domain));
  if (op == "max") return max_of(args());
  if (op == "min") return min_of(args());
  if (op == "conditional_quantile") {
    return conditional_quantile(domain, vec_from_json(j.at("S")),
                                j.at("T").get<std::vector<int>>(), j.at("tau").get<int>(),
                                j.at("alpha").get<double>());
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown function op: " + op);
}

}  // namespace mmest
