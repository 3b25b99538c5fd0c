"""Near-minimax estimation of linear and N-convex functionals."""

from ._core import (
    ColorTest,
    ConvexCompactSet,
    LinearEstimator,
    MmestError,
    ObservationScheme,
    PairwiseTest,
    SchemeKind,
    boxplot_svg,
    build_color_test,
    build_estimator,
    hazard_bounds,
    log_affinity,
    near_optimality_factor,
    pf_spectral,
    run_experiment,
    sample_statistic,
    solve_pair,
)

__all__ = [
    "ColorTest",
    "ConvexCompactSet",
    "LinearEstimator",
    "MmestError",
    "ObservationScheme",
    "PairwiseTest",
    "SchemeKind",
    "boxplot_svg",
    "build_color_test",
    "build_estimator",
    "hazard_bounds",
    "log_affinity",
    "near_optimality_factor",
    "pf_spectral",
    "run_experiment",
    "sample_statistic",
    "solve_pair",
]
