#include "mmest/obs_scheme.hpp"

#include <cmath>
#include <numbers>

#include "mmest/error.hpp"

namespace mmest {
namespace {

void check_exponent(double v) {
  if (v > kMaxExponent) throw Error(ErrorCode::kOverflow, "exponent exceeds 700");
}

void check_detector(const ObservationScheme& scheme, const Detector& det) {
  if (det.kind != scheme.kind()) throw Error(ErrorCode::kInvalidArgument, "detector kind mismatch");
  if (det.coef.size() != scheme.d()) {
    throw Error(ErrorCode::kInvalidArgument, "detector dimension mismatch");
  }
  if (scheme.kind() == SchemeKind::kPoisson &&
      det.coef.lpNorm<Eigen::Infinity>() > kMaxPoissonCoef) {
    throw Error(ErrorCode::kOverflow, "Poisson detector coefficient exceeds 50 in magnitude");
  }
}

}  // namespace

const char* to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::kGaussian: return "gaussian";
    case SchemeKind::kPoisson: return "poisson";
    case SchemeKind::kDiscrete: return "discrete";
  }
  return "unknown";
}

SchemeKind scheme_kind_from_string(const std::string& name) {
  if (name == "gaussian") return SchemeKind::kGaussian;
  if (name == "poisson") return SchemeKind::kPoisson;
  if (name == "discrete") return SchemeKind::kDiscrete;
  throw Error(ErrorCode::kInvalidArgument, "unknown observation scheme: " + name);
}

ObservationScheme::ObservationScheme(SchemeKind kind, int d) : kind_(kind), d_(d) {
  if (d < 1) throw Error(ErrorCode::kInvalidArgument, "scheme dimension must be positive");
}

bool ObservationScheme::in_domain(const Vec& mu) const {
  if (mu.size() != d_ || !mu.allFinite()) return false;
  switch (kind_) {
    case SchemeKind::kGaussian: return true;
    case SchemeKind::kPoisson: return (mu.array() > 0.0).all();
    case SchemeKind::kDiscrete:
      return (mu.array() >= 1e-12).all() && std::abs(mu.sum() - 1.0) <= 1e-12 * d_ + 1e-12;
  }
  return false;
}

void ObservationScheme::check_param(const Vec& mu) const {
  if (!in_domain(mu)) {
    throw Error(ErrorCode::kParamOutOfDomain,
                std::string("parameter outside the ") + to_string(kind_) + " domain");
  }
}

json to_json(const ObservationScheme& scheme) {
  return json{{"kind", to_string(scheme.kind())}, {"d", scheme.d()}};
}

ObservationScheme scheme_from_json(const json& j) {
  return {scheme_kind_from_string(j.at("kind").get<std::string>()), j.at("d").get<int>()};
}

Observation Observation::from_points(SchemeKind kind, Mat points) {
  if (kind == SchemeKind::kDiscrete) {
    throw Error(ErrorCode::kInvalidArgument, "discrete observations are symbols");
  }
  Observation obs;
  obs.kind_ = kind;
  obs.K_ = static_cast<int>(points.cols());
  obs.statistic_ = points.rowwise().sum();
  obs.points_ = std::move(points);
  return obs;
}

Observation Observation::from_symbols(int d, std::vector<int> symbols) {
  Observation obs;
  obs.kind_ = SchemeKind::kDiscrete;
  obs.K_ = static_cast<int>(symbols.size());
  obs.statistic_ = Vec::Zero(d);
  for (int s : symbols) {
    if (s < 1 || s > d) throw Error(ErrorCode::kInvalidArgument, "symbol outside 1..d");
    obs.statistic_(s - 1) += 1.0;
  }
  obs.symbols_ = std::move(symbols);
  return obs;
}

Observation Observation::from_statistic(SchemeKind kind, int K, Vec statistic) {
  if (K < 1) throw Error(ErrorCode::kInvalidArgument, "K must be positive");
  if (kind == SchemeKind::kDiscrete &&
      ((statistic.array() < 0.0).any() || statistic.sum() != static_cast<double>(K))) {
    throw Error(ErrorCode::kInvalidArgument, "symbol counts must be nonnegative and sum to K");
  }
  Observation obs;
  obs.kind_ = kind;
  obs.K_ = K;
  obs.statistic_ = std::move(statistic);
  return obs;
}

json to_json(const Observation& obs) {
  const bool bare = obs.kind() == SchemeKind::kDiscrete ? obs.symbols().empty()
                                                        : obs.points().cols() == 0;
  if (bare) return json{{"K", obs.K()}, {"statistic", to_json(obs.statistic())}};
  if (obs.kind() == SchemeKind::kDiscrete) return json(obs.symbols());
  json out = json::array();
  for (Eigen::Index t = 0; t < obs.points().cols(); ++t) {
    out.push_back(to_json(Vec(obs.points().col(t))));
  }
  return out;
}

Observation observation_from_json(SchemeKind kind, int d, const json& j) {
  if (j.is_object()) {
    Vec stat = vec_from_json(j.at("statistic"));
    if (stat.size() != d) throw Error(ErrorCode::kInvalidArgument, "statistic has wrong dimension");
    return Observation::from_statistic(kind, j.at("K").get<int>(), std::move(stat));
  }
  if (kind == SchemeKind::kDiscrete) return Observation::from_symbols(d, j.get<std::vector<int>>());
  Mat points(d, static_cast<Eigen::Index>(j.size()));
  for (size_t t = 0; t < j.size(); ++t) {
    Vec w = vec_from_json(j[t]);
    if (w.size() != d) throw Error(ErrorCode::kInvalidArgument, "sample has wrong dimension");
    points.col(static_cast<Eigen::Index>(t)) = w;
  }
  return Observation::from_points(kind, std::move(points));
}

Detector Detector::zero(SchemeKind kind, int d) { return Detector{kind, 0.0, Vec::Zero(d), 0.0}; }

Detector Detector::scaled(double factor) const {
  return Detector{kind, phi0 * factor, coef * factor, shift * factor};
}

Detector Detector::operator-() const { return scaled(-1.0); }

json to_json(const Detector& det) {
  json out{{"kind", to_string(det.kind)}, {"shift", det.shift}};
  if (det.kind == SchemeKind::kDiscrete) {
    out["table"] = to_json(det.coef);
  } else {
    out["phi0"] = det.phi0;
    out["phi"] = to_json(det.coef);
  }
  return out;
}

Detector detector_from_json(const json& j) {
  Detector det;
  det.kind = scheme_kind_from_string(j.at("kind").get<std::string>());
  det.shift = j.value("shift", 0.0);
  if (det.kind == SchemeKind::kDiscrete) {
    det.coef = vec_from_json(j.at("table"));
  } else {
    det.phi0 = j.value("phi0", 0.0);
    det.coef = vec_from_json(j.at("phi"));
  }
  return det;
}

double log_density(const ObservationScheme& scheme, const Vec& mu, const Vec& omega) {
  scheme.check_param(mu);
  switch (scheme.kind()) {
    case SchemeKind::kGaussian:
      if (omega.size() != scheme.d()) throw Error(ErrorCode::kInvalidArgument, "bad sample size");
      return -0.5 * scheme.d() * std::log(2.0 * std::numbers::pi) - 0.5 * (omega - mu).squaredNorm();
    case SchemeKind::kPoisson: {
      if (omega.size() != scheme.d()) throw Error(ErrorCode::kInvalidArgument, "bad sample size");
      double out = 0.0;
      for (Eigen::Index i = 0; i < omega.size(); ++i) {
        const double k = omega(i);
        if (k < 0.0 || k != std::floor(k)) return -kInf;
        out += k * std::log(mu(i)) - mu(i) - std::lgamma(k + 1.0);
      }
      return out;
    }
    case SchemeKind::kDiscrete:
      if (omega.size() != 1) throw Error(ErrorCode::kInvalidArgument, "discrete sample is a symbol");
      return log_density(scheme, mu, static_cast<int>(omega(0)));
  }
  return 0.0;
}

double log_density(const ObservationScheme& scheme, const Vec& mu, int symbol) {
  if (scheme.kind() != SchemeKind::kDiscrete) {
    throw Error(ErrorCode::kInvalidArgument, "symbol samples require the discrete scheme");
  }
  scheme.check_param(mu);
  if (symbol < 1 || symbol > scheme.d()) return -kInf;
  return std::log(mu(symbol - 1));
}

Observation sample(const ObservationScheme& scheme, const Vec& mu, Rng& rng, int K) {
  scheme.check_param(mu);
  if (K < 1) throw Error(ErrorCode::kInvalidArgument, "K must be positive");
  const int d = scheme.d();
  switch (scheme.kind()) {
    case SchemeKind::kGaussian: {
      Mat points(d, K);
      for (int t = 0; t < K; ++t) {
        for (int i = 0; i < d; ++i) points(i, t) = mu(i) + rng.normal();
      }
      return Observation::from_points(SchemeKind::kGaussian, std::move(points));
    }
    case SchemeKind::kPoisson: {
      Mat points(d, K);
      for (int t = 0; t < K; ++t) {
        for (int i = 0; i < d; ++i) points(i, t) = static_cast<double>(rng.poisson(mu(i)));
      }
      return Observation::from_points(SchemeKind::kPoisson, std::move(points));
    }
    case SchemeKind::kDiscrete: {
      std::vector<int> symbols(K);
      for (int t = 0; t < K; ++t) symbols[t] = rng.categorical(mu) + 1;
      return Observation::from_symbols(d, std::move(symbols));
    }
  }
  return {};
}

Observation sample_statistic(const ObservationScheme& scheme, const Vec& mu, Rng& rng, int K) {
  scheme.check_param(mu);
  if (K < 1) throw Error(ErrorCode::kInvalidArgument, "K must be positive");
  const int d = scheme.d();
  Vec stat(d);
  switch (scheme.kind()) {
    case SchemeKind::kGaussian: {
      const double sd = std::sqrt(static_cast<double>(K));
      for (int i = 0; i < d; ++i) stat(i) = K * mu(i) + sd * rng.normal();
      break;
    }
    case SchemeKind::kPoisson:
      for (int i = 0; i < d; ++i) stat(i) = static_cast<double>(rng.poisson(K * mu(i)));
      break;
    case SchemeKind::kDiscrete:
      stat.setZero();
      for (int t = 0; t < K; ++t) stat(rng.categorical(mu)) += 1.0;
      break;
  }
  return Observation::from_statistic(scheme.kind(), K, std::move(stat));
}

double cumulant(const ObservationScheme& scheme, const Detector& det, const Vec& mu) {
  scheme.check_param(mu);
  check_detector(scheme, det);
  switch (scheme.kind()) {
    case SchemeKind::kGaussian:
      return det.phi0 + det.coef.dot(mu) + 0.5 * det.coef.squaredNorm();
    case SchemeKind::kPoisson: {
      double out = det.phi0;
      for (Eigen::Index i = 0; i < mu.size(); ++i) out += mu(i) * std::expm1(det.coef(i));
      return out;
    }
    case SchemeKind::kDiscrete: {
      const double top = det.coef.maxCoeff();
      check_exponent(top);
      // Log-sum-exp shifted by the largest exponent.
      const double s = (mu.array() * (det.coef.array() - top).exp()).sum();
      return top + std::log(s);
    }
  }
  return 0.0;
}

Vec cumulant_grad_mu(const ObservationScheme& scheme, const Detector& det, const Vec& mu) {
  scheme.check_param(mu);
  check_detector(scheme, det);
  switch (scheme.kind()) {
    case SchemeKind::kGaussian: return det.coef;
    case SchemeKind::kPoisson: return det.coef.array().unaryExpr([](double v) { return std::expm1(v); });
    case SchemeKind::kDiscrete: {
      const double top = det.coef.maxCoeff();
      check_exponent(top);
      const Vec w = (det.coef.array() - top).exp();
      return w / mu.dot(w);
    }
  }
  return {};
}

Detector log_ratio_detector(const ObservationScheme& scheme, const Vec& mu, const Vec& nu) {
  scheme.check_param(mu);
  scheme.check_param(nu);
  Detector det = Detector::zero(scheme.kind(), scheme.d());
  switch (scheme.kind()) {
    case SchemeKind::kGaussian:
      det.phi0 = 0.25 * (nu.squaredNorm() - mu.squaredNorm());
      det.coef = 0.5 * (mu - nu);
      break;
    case SchemeKind::kPoisson:
      det.phi0 = 0.5 * (nu - mu).sum();
      det.coef = 0.5 * (mu.array() / nu.array()).log();
      break;
    case SchemeKind::kDiscrete:
      det.coef = 0.5 * (mu.array() / nu.array()).log();
      break;
  }
  return det;
}

double evaluate(const Detector& det, const Observation& obs) {
  if (det.kind != obs.kind()) throw Error(ErrorCode::kInvalidArgument, "detector kind mismatch");
  if (det.coef.size() != obs.statistic().size()) {
    throw Error(ErrorCode::kInvalidArgument, "detector dimension mismatch");
  }
  return obs.K() * det.phi0 + det.coef.dot(obs.statistic()) - det.shift;
}

}  // namespace mmest
