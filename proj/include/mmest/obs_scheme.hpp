#pragma once

#include <string>
#include <vector>

#include "mmest/linalg.hpp"
#include "mmest/rng.hpp"

namespace mmest {

enum class SchemeKind { kGaussian, kPoisson, kDiscrete };

const char* to_string(SchemeKind kind);
SchemeKind scheme_kind_from_string(const std::string& name);

// Exponents beyond this raise kOverflow.
inline constexpr double kMaxExponent = 700.0;
// Poisson detector coefficients are restricted to |phi_i| <= this bound.
inline constexpr double kMaxPoissonCoef = 50.0;

// Gaussian N(mu, I_d), Poisson with independent coordinates, or a discrete
// distribution on {1, ..., d}. The K-repeated version is implicit: every
// operation taking an Observation sums over its K samples.
class ObservationScheme {
 public:
  ObservationScheme(SchemeKind kind, int d);
  static ObservationScheme gaussian(int d) { return {SchemeKind::kGaussian, d}; }
  static ObservationScheme poisson(int d) { return {SchemeKind::kPoisson, d}; }
  static ObservationScheme discrete(int d) { return {SchemeKind::kDiscrete, d}; }

  SchemeKind kind() const { return kind_; }
  int d() const { return d_; }

  bool in_domain(const Vec& mu) const;
  // Throws kParamOutOfDomain when mu is not a valid parameter.
  void check_param(const Vec& mu) const;

  bool operator==(const ObservationScheme&) const = default;

 private:
  SchemeKind kind_;
  int d_;
};

json to_json(const ObservationScheme& scheme);
ObservationScheme scheme_from_json(const json& j);

// K samples. Gaussian and Poisson samples are columns of `points`; discrete
// samples are symbols in 1..d. `statistic` is the sum of the samples (counts
// of each symbol for Discrete), which is all a detector needs.
class Observation {
 public:
  static Observation from_points(SchemeKind kind, Mat points);
  static Observation from_symbols(int d, std::vector<int> symbols);
  // Sufficient statistic only; points() and symbols() stay empty.
  static Observation from_statistic(SchemeKind kind, int K, Vec statistic);

  SchemeKind kind() const { return kind_; }
  int K() const { return K_; }
  const Mat& points() const { return points_; }
  const std::vector<int>& symbols() const { return symbols_; }
  const Vec& statistic() const { return statistic_; }

 private:
  SchemeKind kind_ = SchemeKind::kGaussian;
  int K_ = 0;
  Mat points_;
  std::vector<int> symbols_;
  Vec statistic_;
};

json to_json(const Observation& obs);
Observation observation_from_json(SchemeKind kind, int d, const json& j);

// phi(omega) = phi0 + coef^T omega for Gaussian/Poisson, phi(omega) = coef(omega)
// for Discrete (phi0 unused and kept at 0). `shift` is subtracted once after
// summing over the K samples.
struct Detector {
  SchemeKind kind = SchemeKind::kGaussian;
  double phi0 = 0.0;
  Vec coef;
  double shift = 0.0;

  static Detector zero(SchemeKind kind, int d);
  Detector scaled(double factor) const;
  Detector operator-() const;
};

json to_json(const Detector& det);
Detector detector_from_json(const json& j);

double log_density(const ObservationScheme& scheme, const Vec& mu, const Vec& omega);
double log_density(const ObservationScheme& scheme, const Vec& mu, int symbol);

Observation sample(const ObservationScheme& scheme, const Vec& mu, Rng& rng, int K);
// Same law for the statistic, drawn directly: N(K mu, K I) for Gaussian,
// Poisson(K mu) for Poisson. Discrete falls back to K categorical draws.
Observation sample_statistic(const ObservationScheme& scheme, const Vec& mu, Rng& rng, int K);

// Log moment-generating functional ln E_mu[exp(phi(omega))], shift ignored.
double cumulant(const ObservationScheme& scheme, const Detector& det, const Vec& mu);
// Gradient of cumulant with respect to mu.
Vec cumulant_grad_mu(const ObservationScheme& scheme, const Detector& det, const Vec& mu);

// Half log-likelihood ratio 1/2 ln(p_mu / p_nu).
Detector log_ratio_detector(const ObservationScheme& scheme, const Vec& mu, const Vec& nu);

// sum_t phi(omega_t) - shift
double evaluate(const Detector& det, const Observation& obs);

}  // namespace mmest
