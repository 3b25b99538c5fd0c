#pragma once

#include <vector>

#include "mmest/affinity.hpp"

namespace mmest {

struct PfResult {
  double sigma = 0.0;
  // Left/right singular vectors, entrywise positive, ||g|| = ||h|| = 1/sqrt(2).
  Vec g, h;
  int iterations = 0;
  bool converged = false;
};

// Largest singular value of an entrywise positive matrix with its positive
// singular pair, by alternating power iteration g <- E h, h <- E^T g (the
// power method on the square of [[0, E], [E^T, 0]]).
PfResult pf_spectral(const Mat& E);

// Entries of E below this are raised to it.
inline constexpr double kRiskFloor = 1e-300;

// Multi-hypothesis test deciding whether the parameter is blue (in some
// blues[i]) or red (in some reds[j]) from K observations.
struct ColorTest {
  int K = 1;
  int b = 0, r = 0;
  // Pairwise tests of blues[i] vs reds[j], row-major.
  std::vector<PairwiseTest> pairs;
  // E(i, j) = eps_star_ij^K
  Mat E;
  double eps_K = 0.0;
  Vec g, h;
  // alpha(i, j) = ln(h_j / g_i)
  Mat alpha;

  const PairwiseTest& pair(int i, int j) const { return pairs[static_cast<size_t>(i * r + j)]; }
};

ColorTest build_color_test(const ObservationScheme& scheme, const std::vector<ParamSet>& blues,
                           const std::vector<ParamSet>& reds, int K, int threads = 1);
// Assembles E, its spectral data and the shifts from already solved pairs.
ColorTest assemble_color_test(std::vector<PairwiseTest> pairs, int b, int r, int K);

enum class Color { kBlue, kRed };

// Blue iff some row of [phi_ij^(K)(obs) - alpha_ij] is entrywise nonnegative.
Color infer_color(const ColorTest& test, const Observation& obs);

json to_json(const ColorTest& test);
ColorTest color_test_from_json(const json& j);

}  // namespace mmest
