import json

import numpy as np
import pytest
from scipy import stats
from scipy.special import ndtri

from eivclt.exceptions import TooManyFailures, ValidationError
from eivclt.simulate import DesignFamily, ErrorFamily, Scenario, XiFamily
from eivclt.model import IdentifiabilityConfig
from eivclt.verify import (
    design_diagnostics,
    check_design_conditions,
    kolmogorov_sf,
    ks_statistic,
    lindeberg_array_experiment,
    mardia_statistics,
    obrien_statistic,
    run_monte_carlo,
    write_vectors_csv,
)

from conftest import GAMMA, structural_scenario


def test_ks_perfect_quantiles():
    n = 200
    x = ndtri((np.arange(1, n + 1) - 0.5) / n)
    D, p = ks_statistic(x)
    assert D == pytest.approx(0.5 / n, abs=1e-12)
    assert p == pytest.approx(1.0)


def test_ks_constant_samples():
    D, _ = ks_statistic(np.zeros(50))
    assert D >= 0.5


def test_ks_needs_twenty_samples():
    with pytest.raises(ValidationError):
        ks_statistic(np.zeros(19))


@pytest.mark.parametrize("t", [0.3, 0.6, 0.9, 1.0, 1.36, 2.0, 3.0])
def test_kolmogorov_sf_against_scipy(t):
    assert kolmogorov_sf(t) == pytest.approx(stats.kstwobign.sf(t), abs=1e-12)


def test_ks_distance_matches_scipy(rng):
    x = rng.standard_normal(500)
    D, _ = ks_statistic(x)
    assert D == pytest.approx(stats.kstest(x, "norm").statistic, abs=1e-14)


def test_ks_calibration():
    rng = np.random.default_rng(314)
    pvals = [ks_statistic(rng.standard_normal(1000))[1] for _ in range(200)]
    assert np.mean(np.array(pvals) < 0.05) == pytest.approx(0.05, abs=0.04)


def brute_force_mardia(X):
    R = X.shape[0]
    C = X - X.mean(axis=0)
    S = C.T @ C / R
    G = C @ np.linalg.solve(S, C.T)
    return np.sum(G**3) / R**2, np.mean(np.diag(G) ** 2)


def test_mardia_matches_pairwise_definition(rng):
    X = rng.standard_normal((300, 3)) @ np.array([[1, 0.2, 0], [0, 1, 0.5], [0, 0, 2.0]])
    X[:, 0] = np.exp(X[:, 0] / 2)
    res = mardia_statistics(X)
    b1, b2 = brute_force_mardia(X)
    assert res.b1 == pytest.approx(b1, rel=1e-10)
    assert res.b2 == pytest.approx(b2, rel=1e-10)


def test_mardia_symmetric_data_has_zero_skewness(rng):
    X = rng.standard_normal((100, 3))
    res = mardia_statistics(np.vstack([X, -X]))
    assert res.b1 == pytest.approx(0.0, abs=1e-20)


def test_mardia_normal_kurtosis():
    X = np.random.default_rng(2718).standard_normal((5000, 3))
    assert mardia_statistics(X).b2 == pytest.approx(15.0, abs=0.5)


def test_obrien_examples():
    assert obrien_statistic([3, 4]) == pytest.approx(0.64)
    assert obrien_statistic(np.full(8, 2.5)) == pytest.approx(1 / 8)
    assert obrien_statistic([0, 0, 0, 1]) == 1.0
    with pytest.raises(ValidationError):
        obrien_statistic([0, 0])


def test_design_conditions_equispaced():
    (row,) = check_design_conditions(DesignFamily.equispaced(0, 1), [1000])
    assert row["mean"] == pytest.approx(0.5, abs=1e-3)
    assert row["mean_square"] == pytest.approx(1 / 3, abs=1e-3)
    assert row["max_share"] == pytest.approx(3 / 1000, rel=0.01)
    assert not row["degenerate"]


def test_design_conditions_alternating():
    n = 10_000
    (row,) = check_design_conditions(DesignFamily.alternating_growth(0.25), [n])
    assert abs(row["mean"]) < 0.01
    assert row["mean_square"] == pytest.approx(2 / 3 * n**0.5, rel=0.01)
    assert row["max_share"] == pytest.approx(1.5 / n, rel=0.01)


def test_constant_design_is_flagged():
    row = design_diagnostics(np.full(50, 3.0))
    assert row["max_share"] == pytest.approx(1 / 50)
    assert row["degenerate"]


def test_monte_carlo_smoke():
    report = run_monte_carlo(structural_scenario(3, n=300), 200, 0.95, 1)
    assert report.successes == 200 and report.failures == {}
    for summary in report.modes.values():
        assert 0.0 <= summary.coverage <= 1.0
        assert summary.vectors.shape == (200, 3)
        assert len(summary.ks) == 3
    data = json.loads(report.to_json())
    assert data["schema_version"] == 1 and data["R"] == 200


def test_monte_carlo_requires_enough_reps():
    with pytest.raises(ValidationError):
        run_monte_carlo(structural_scenario(3, n=100), 99)


def weak_signal_scenario():
    return Scenario(
        "structural",
        XiFamily.normal(0.0, 0.005),
        ErrorFamily("gaussian_correlated", GAMMA),
        2.0,
        1.0,
        100,
        IdentifiabilityConfig.a3(0.4, 0.1),
    )


def test_failure_accounting():
    report = run_monte_carlo(weak_signal_scenario(), 200, 0.95, 3, max_failure_rate=1.0)
    n_fail = sum(report.failures.values())
    assert n_fail > 0
    assert "DegenerateDenominator" in report.failures
    assert report.successes + n_fail == 200
    assert report.modes["b"].vectors.shape[0] == report.successes
    with pytest.raises(TooManyFailures):
        run_monte_carlo(weak_signal_scenario(), 200, 0.95, 3)


def test_report_independent_of_workers():
    sc = structural_scenario(2, n=200)
    serial = run_monte_carlo(sc, 120, 0.95, 77, workers=1).to_json()
    parallel = run_monte_carlo(sc, 120, 0.95, 77, workers=3).to_json()
    assert serial == parallel


def test_vectors_csv(tmp_path):
    report = run_monte_carlo(structural_scenario(3, n=100), 100, 0.95, 5)
    path = tmp_path / "v.csv"
    write_vectors_csv(report, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "rep,mode,T1,T2,T3,norm2"
    assert len(lines) == 1 + 2 * report.successes


def test_lindeberg_equal_weights_is_iid_student():
    (rep,) = lindeberg_array_experiment(2, [300], 200, 4, weights="equal")
    assert rep.raikov["sigma"] == [[1.0, 0.0], [0.0, 1.0]]
    assert rep.modes["student"].vectors.shape == (200, 2)


def test_lindeberg_sigma_recovered():
    (rep,) = lindeberg_array_experiment(2, [2000], 300, 6)
    np.testing.assert_allclose(rep.raikov["mean_scaled_V"], 2 * np.eye(2), atol=0.1)


def test_lindeberg_dimension_guard():
    with pytest.raises(ValidationError):
        lindeberg_array_experiment(6, [100], 10, 0)
