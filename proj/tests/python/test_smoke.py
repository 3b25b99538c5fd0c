import json
import math
import pathlib

import numpy as np
import pytest

import mmest


def test_gaussian_point_pair_closed_form():
    scheme = mmest.ObservationScheme.gaussian(1)
    a = mmest.ConvexCompactSet.point(np.array([0.0]))
    b = mmest.ConvexCompactSet.point(np.array([2.0]))
    test = mmest.solve_pair(scheme, a, b, 1)
    # ln affinity of N(0, 1) and N(2, 1) is -|2|^2 / 8.
    assert test.opt == pytest.approx(-0.5)
    assert test.eps_star == pytest.approx(math.exp(-0.5))
    assert test.decide(scheme, np.array([0.2])) == 1
    assert test.decide(scheme, np.array([1.8])) == 2


def test_pf_spectral_matches_numpy():
    rng = np.random.default_rng(0)
    E = rng.uniform(0.1, 1.0, size=(5, 7))
    sigma, g, h = mmest.pf_spectral(E)
    assert sigma == pytest.approx(np.linalg.svd(E, compute_uv=False)[0], rel=1e-10)
    assert np.allclose(E @ h, sigma * g, atol=1e-10 * sigma)
    assert (g > 0).all() and (h > 0).all()


def test_linear_estimator_on_intervals():
    scheme = mmest.ObservationScheme.gaussian(1)
    sets = [
        mmest.ConvexCompactSet.box(np.array([0.1]), np.array([0.3])),
        mmest.ConvexCompactSet.box(np.array([0.5]), np.array([0.8])),
    ]
    est = mmest.build_estimator(scheme, 25, sets, [np.eye(1), np.eye(1)], np.array([1.0]), 0.05)
    assert est.rho > 0
    hits = 0
    for t in range(200):
        stat = mmest.sample_statistic(scheme, np.array([0.6]), 25, seed=4, stream=t)
        hits += abs(est.estimate(scheme, stat) - 0.6) <= est.rho_i[1]
    assert hits >= 200 * (1 - 0.05 - 3 * math.sqrt(0.05 / 200))


def test_color_test_and_errors():
    scheme = mmest.ObservationScheme.poisson(1)
    blue = mmest.ConvexCompactSet.box(np.array([1.0]), np.array([1.5]))
    red = mmest.ConvexCompactSet.box(np.array([3.0]), np.array([4.0]))
    ct = mmest.build_color_test(scheme, [blue], [red], 40)
    assert 0 < ct.eps_K < 0.05
    assert ct.infer(scheme, np.array([40.0])) == "blue"
    assert ct.infer(scheme, np.array([160.0])) == "red"
    with pytest.raises(mmest.MmestError):
        mmest.ConvexCompactSet.box(np.array([1.0]), np.array([0.0])).lp_minimize(np.array([1.0]))


def test_runner_and_boxplot():
    config = {"experiment": "linear_gaussian_singletons", "n": 4, "m": 3, "I": 3,
              "instances": 2, "K": [1, 100], "trials": 5, "seed": 3}
    csv = mmest.run_experiment(json.dumps(config))
    assert csv == mmest.run_experiment(json.dumps(config))
    assert csv.startswith("# csv-schema: v1\n")
    svg = mmest.boxplot_svg(csv, "rho", "K")
    assert svg.count('<g class="box"') == 2
    with pytest.raises(mmest.MmestError):
        mmest.run_experiment(json.dumps({"experiment": "linear_gaussian_singletons", "x": 1}))


def test_hazard_bounds():
    a0, b0 = mmest.hazard_bounds(12, 6, 0.9)
    assert 0 < a0 < 1 / 7 < b0 < 1


def test_shipped_configs_match_schema():
    jsonschema = pytest.importorskip("jsonschema")
    root = pathlib.Path(__file__).resolve().parents[2]
    schema = json.loads((root / "docs" / "config.schema.json").read_text())
    configs = sorted((root / "configs").glob("*.json"))
    assert configs
    for path in configs:
        jsonschema.validate(json.loads(path.read_text()), schema)
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate({"experiment": "hazard_bisection", "n": 3}, schema)
