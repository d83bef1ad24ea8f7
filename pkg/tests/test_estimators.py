import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eivclt.estimators import estimate
from eivclt.exceptions import DegenerateDenominator
from eivclt.model import Dataset, IdentifiabilityConfig, Variant
from eivclt.simulate import generate_noiseless

LINE = Dataset([0.0, 1.0, 2.0], [1.0, 3.0, 5.0])


@pytest.mark.parametrize(
    "config",
    [IdentifiabilityConfig.a1(1.0), IdentifiabilityConfig.a2(0.0, 0.0), IdentifiabilityConfig.a3(0.0, 0.0)],
    ids=["A1", "A2", "A3"],
)
def test_exact_line(config):
    est = estimate(LINE, config)
    assert est.beta_hat == pytest.approx(2.0, abs=1e-12)
    assert est.alpha_hat == pytest.approx(1.0, abs=1e-12)
    assert est.gamma_hat == pytest.approx(0.0, abs=1e-12)
    assert est.variant is config.variant


def test_flat_response_is_degenerate_under_a1():
    with pytest.raises(DegenerateDenominator) as info:
        estimate(Dataset([1, 2, 3], [5, 5, 5]), IdentifiabilityConfig.a1(1.0))
    assert "S_xy" in info.value.proviso


def test_a2_requires_positive_numerator():
    data = Dataset([0.0, 1.0, 2.0], [1.0, 3.0, 5.0])  # S_yy = 8/3
    with pytest.raises(DegenerateDenominator, match="lambda"):
        estimate(data, IdentifiabilityConfig.a2(3.0, 0.0))


def test_a3_requires_positive_denominator():
    with pytest.raises(DegenerateDenominator, match="theta"):
        estimate(LINE, IdentifiabilityConfig.a3(1.0, 0.0))  # S_xx = 2/3


def test_negative_gamma_is_flagged_not_clamped():
    # x spread larger than theta allows; A3 with mu pulling S_yy - mu*beta below zero
    data = Dataset([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 2.0, 3.0])
    est = estimate(data, IdentifiabilityConfig.a3(0.5, -0.5))
    assert est.gamma_negative and est.gamma_hat < 0


def random_data(seed, n=50, beta=None):
    rng = np.random.default_rng(seed)
    b = rng.uniform(-3, 3) if beta is None else beta
    xi = rng.normal(0, 2, n)
    return Dataset(xi + rng.normal(0, 0.5, n), b * xi + 1 + rng.normal(0, 0.5, n))


@settings(max_examples=200, deadline=None)
@given(
    st.floats(-5, 5).filter(lambda b: abs(b) > 1e-3),
    st.floats(-5, 5),
    st.integers(0, 2**31),
)
def test_noiseless_recovery_all_variants(beta, alpha, seed):
    x = np.random.default_rng(seed).uniform(-3, 3, 20)
    data = generate_noiseless(beta, alpha, x)
    for config in (IdentifiabilityConfig.a1(1.7), IdentifiabilityConfig.a2(0.0, 0.0), IdentifiabilityConfig.a3(0.0, 0.0)):
        est = estimate(data, config)
        scale = 1 + abs(beta) + abs(alpha)
        assert est.beta_hat == pytest.approx(beta, abs=1e-10 * scale)
        assert est.alpha_hat == pytest.approx(alpha, abs=1e-10 * scale)
        assert est.gamma_hat == pytest.approx(0.0, abs=1e-10 * scale**2)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**31))
def test_orthogonal_regression_reciprocity(seed):
    data = random_data(seed)
    config = IdentifiabilityConfig.a1(1.0)
    b_xy = estimate(data, config).beta_hat
    b_yx = estimate(data.swapped(), config).beta_hat
    assert b_xy * b_yx == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.floats(-50, 50), st.floats(-50, 50))
def test_translation_equivariance(seed, c, d):
    data = random_data(seed, beta=1.5)
    shifted = Dataset(data.x + c, data.y + d)
    for config in (IdentifiabilityConfig.a1(1.0), IdentifiabilityConfig.a2(0.25, 0.0), IdentifiabilityConfig.a3(0.25, 0.0)):
        e0, e1 = estimate(data, config), estimate(shifted, config)
        assert e1.beta_hat == pytest.approx(e0.beta_hat, abs=1e-10)
        assert e1.alpha_hat == pytest.approx(e0.alpha_hat + d - c * e0.beta_hat, abs=1e-10 * (1 + abs(c) + abs(d)))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.1, 10))
def test_a1_slope_sign_matches_covariance(seed, lam):
    data = random_data(seed)
    est = estimate(data, IdentifiabilityConfig.a1(lam))
    s_xy = np.mean((data.x - data.x.mean()) * (data.y - data.y.mean()))
    assert np.sign(est.beta_hat) == np.sign(s_xy)
    assert est.variant is Variant.A1
