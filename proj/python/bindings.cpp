// Python bindings for the estimation core.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mmest/bisection.hpp"
#include "mmest/color_test.hpp"
#include "mmest/error.hpp"
#include "mmest/harness.hpp"
#include "mmest/linear_estimator.hpp"
#include "mmest/rng.hpp"

namespace py = pybind11;
using namespace mmest;

namespace {

Observation observation(const ObservationScheme& scheme, int K, const Vec& statistic) {
  return Observation::from_statistic(scheme.kind(), K, statistic);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Near-minimax estimation of linear and N-convex functionals";

  py::register_exception<Error>(m, "MmestError", PyExc_RuntimeError);

  py::enum_<SchemeKind>(m, "SchemeKind")
      .value("GAUSSIAN", SchemeKind::kGaussian)
      .value("POISSON", SchemeKind::kPoisson)
      .value("DISCRETE", SchemeKind::kDiscrete);

  py::class_<ObservationScheme>(m, "ObservationScheme")
      .def_static("gaussian", &ObservationScheme::gaussian, py::arg("d"))
      .def_static("poisson", &ObservationScheme::poisson, py::arg("d"))
      .def_static("discrete", &ObservationScheme::discrete, py::arg("d"))
      .def_property_readonly("kind", &ObservationScheme::kind)
      .def_property_readonly("d", &ObservationScheme::d)
      .def("in_domain", &ObservationScheme::in_domain, py::arg("mu"));

  py::class_<ConvexCompactSet>(m, "ConvexCompactSet")
      .def(py::init<Mat, Vec, Mat, Vec, Vec, Vec>(), py::arg("A"), py::arg("b"), py::arg("C"),
           py::arg("d"), py::arg("lo"), py::arg("hi"))
      .def_static("box", &ConvexCompactSet::box, py::arg("lo"), py::arg("hi"))
      .def_static("point", &ConvexCompactSet::point, py::arg("x"))
      .def_static("simplex", &ConvexCompactSet::simplex, py::arg("dim"))
      .def_property_readonly("dim", &ConvexCompactSet::dim)
      .def("is_empty", &ConvexCompactSet::is_empty)
      .def("contains", &ConvexCompactSet::contains, py::arg("x"), py::arg("tol") = 1e-7)
      .def(
          "lp_minimize",
          [](const ConvexCompactSet& s, const Vec& cost) {
            const LpSolution sol = s.lp_minimize(cost);
            return py::make_tuple(sol.point, sol.value);
          },
          py::arg("cost"), "Returns (point, value) minimizing cost^T x.");

  py::class_<PairwiseTest>(m, "PairwiseTest")
      .def_readonly("opt", &PairwiseTest::opt)
      .def_readonly("eps_star", &PairwiseTest::eps_star)
      .def_readonly("mu_star", &PairwiseTest::mu_star)
      .def_readonly("nu_star", &PairwiseTest::nu_star)
      .def_readonly("K", &PairwiseTest::K)
      .def(
          "decide",
          [](const PairwiseTest& t, const ObservationScheme& scheme, const Vec& statistic) {
            return decide(t, observation(scheme, t.K, statistic)) == Hypothesis::kH1 ? 1 : 2;
          },
          py::arg("scheme"), py::arg("statistic"),
          "1 or 2, the accepted hypothesis for a sufficient statistic.");

  m.def(
      "solve_pair",
      [](const ObservationScheme& scheme, const ConvexCompactSet& first,
         const ConvexCompactSet& second, int K) { return solve_pair(scheme, first, second, K); },
      py::arg("scheme"), py::arg("first"), py::arg("second"), py::arg("K"));
  m.def("log_affinity", &log_affinity, py::arg("scheme"), py::arg("mu"), py::arg("nu"));

  m.def(
      "pf_spectral",
      [](const Mat& E) {
        const PfResult r = pf_spectral(E);
        return py::make_tuple(r.sigma, r.g, r.h);
      },
      py::arg("E"), "Largest singular value of a positive matrix with its (g, h) pair.");

  py::class_<ColorTest>(m, "ColorTest")
      .def_readonly("eps_K", &ColorTest::eps_K)
      .def_readonly("E", &ColorTest::E)
      .def(
          "infer",
          [](const ColorTest& t, const ObservationScheme& scheme, const Vec& statistic) {
            return infer_color(t, observation(scheme, t.K, statistic)) == Color::kBlue ? "blue"
                                                                                       : "red";
          },
          py::arg("scheme"), py::arg("statistic"));
  m.def(
      "build_color_test",
      [](const ObservationScheme& scheme, const std::vector<ConvexCompactSet>& blues,
         const std::vector<ConvexCompactSet>& reds, int K) {
        std::vector<ParamSet> b, r;
        for (const auto& s : blues) b.push_back(ParamSet::direct(s));
        for (const auto& s : reds) r.push_back(ParamSet::direct(s));
        return build_color_test(scheme, b, r, K);
      },
      py::arg("scheme"), py::arg("blues"), py::arg("reds"), py::arg("K"));

  py::class_<LinearEstimator>(m, "LinearEstimator")
      .def_readonly("rho", &LinearEstimator::rho)
      .def_readonly("rho_i", &LinearEstimator::rho_i)
      .def_readonly("K", &LinearEstimator::K)
      .def(
          "estimate",
          [](const LinearEstimator& est, const ObservationScheme& scheme, const Vec& statistic) {
            return estimate(est, observation(scheme, est.K, statistic));
          },
          py::arg("scheme"), py::arg("statistic"));
  m.def(
      "build_estimator",
      [](const ObservationScheme& scheme, int K, const std::vector<ConvexCompactSet>& sets,
         const std::vector<Mat>& maps, const Vec& g, double epsilon) {
        LinearProblem p{scheme, K, sets, {}, g, epsilon};
        for (const auto& A : maps) p.maps.push_back(AffineMap{A, Vec::Zero(A.rows())});
        return build_estimator(p);
      },
      py::arg("scheme"), py::arg("K"), py::arg("sets"), py::arg("maps"), py::arg("g"),
      py::arg("epsilon"), "Estimator of g^T x from observations of A_l x, x in sets[l].");
  m.def("near_optimality_factor", &near_optimality_factor, py::arg("epsilon"), py::arg("I"));

  m.def(
      "sample_statistic",
      [](const ObservationScheme& scheme, const Vec& mu, int K, std::uint64_t seed,
         std::uint64_t stream) {
        Rng rng(seed, stream);
        return Vec(sample_statistic(scheme, mu, rng, K).statistic());
      },
      py::arg("scheme"), py::arg("mu"), py::arg("K"), py::arg("seed"), py::arg("stream") = 0);

  m.def(
      "hazard_bounds",
      [](int M, int j, double theta) {
        return function_bounds(hazard_problem(M, j, theta, 1, 0.1));
      },
      py::arg("M"), py::arg("j"), py::arg("theta"),
      "Range (a0, b0) of the hazard rate s_j over the smooth signal set.");

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const ExperimentConfig c = config_from_json(json::parse(config_json));
        return records_to_csv(run_experiment(c));
      },
      py::arg("config_json"), "Runs an experiment from a JSON config and returns the CSV text.");
  m.def(
      "boxplot_svg",
      [](const std::string& csv, const std::string& value, const std::string& by,
         const std::string& title) { return emit_boxplot(parse_csv(csv), value, by, title); },
      py::arg("csv"), py::arg("value"), py::arg("by"), py::arg("title") = "");
}
