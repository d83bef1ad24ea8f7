import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eivclt.exceptions import ValidationError
from eivclt.model import (
    Dataset,
    GroundTruth,
    IdentifiabilityConfig,
    Variant,
    compute_moments,
    read_csv,
    write_csv,
)


def test_constant_data_has_zero_moments():
    m = compute_moments(Dataset([1, 1, 1], [5, 5, 5]))
    assert (m.S_xx, m.S_yy, m.S_xy) == (0.0, 0.0, 0.0)


def test_moments_hand_computed():
    m = compute_moments(Dataset([1, 2, 3], [1, 2, 3]))
    assert m.x_bar == 2.0
    assert m.S_xx == pytest.approx(2 / 3, abs=1e-15)
    assert m.S_xy == pytest.approx(2 / 3, abs=1e-15)
    assert m.S_yy == pytest.approx(2 / 3, abs=1e-15)


def test_moments_two_point_example():
    # the n >= 3 guard is on Dataset; the hand example uses two points
    x, y = np.array([1.0, 2.0]), np.array([2.0, 1.0])
    dx, dy = x - x.mean(), y - y.mean()
    assert np.mean(dx * dy) == -0.25
    m = compute_moments(Dataset([1, 2, 1, 2], [2, 1, 2, 1]))
    assert (m.S_xy, m.S_xx, m.S_yy) == (-0.25, 0.25, 0.25)


def test_dataset_validation():
    with pytest.raises(ValidationError):
        Dataset([1, 2], [1, 2])
    with pytest.raises(ValidationError):
        Dataset([1, 2, 3], [1, 2])
    with pytest.raises(ValidationError):
        Dataset([1, 2, np.nan], [1, 2, 3])


def arrays(n):
    return st.lists(st.floats(-1e3, 1e3), min_size=n, max_size=n)


@settings(max_examples=200, deadline=None)
@given(st.integers(3, 40).flatmap(lambda n: st.tuples(arrays(n), arrays(n))), st.floats(-100, 100), st.floats(-100, 100))
def test_translation_invariance(xy, c, d):
    x, y = map(np.array, xy)
    m0 = compute_moments(Dataset(x, y))
    m1 = compute_moments(Dataset(x + c, y + d))
    scale = max(m0.S_xx + m0.S_yy, 1.0)
    for attr in ("S_xx", "S_yy", "S_xy"):
        assert abs(getattr(m0, attr) - getattr(m1, attr)) <= 1e-9 * scale


@settings(max_examples=200, deadline=None)
@given(st.integers(3, 40).flatmap(lambda n: st.tuples(arrays(n), arrays(n))), st.floats(-10, 10))
def test_scaling_and_consistency(xy, a):
    x, y = map(np.array, xy)
    m0 = compute_moments(Dataset(x, y))
    m1 = compute_moments(Dataset(a * x, y))
    assert m1.S_xx == pytest.approx(a * a * m0.S_xx, rel=1e-9, abs=1e-9)
    assert m1.S_xy == pytest.approx(a * m0.S_xy, rel=1e-9, abs=1e-9)
    for pair in ("xx", "yy", "xy"):
        S = getattr(m0, f"S_{pair}")
        assert np.mean(getattr(m0, f"s_i_{pair}")) == pytest.approx(S, rel=1e-12, abs=1e-12)
    assert m0.S_xx >= 0 and m0.S_yy >= 0
    assert m0.S_xy**2 <= m0.S_xx * m0.S_yy * (1 + 1e-12) + 1e-300


def test_config_fields_per_variant():
    assert IdentifiabilityConfig.a1(2.0).cov == 0.0
    with pytest.raises(ValidationError):
        IdentifiabilityConfig(Variant.A1, lam=1.0, mu=0.2)
    with pytest.raises(ValidationError):
        IdentifiabilityConfig(Variant.A3, theta=0.4)
    with pytest.raises(ValidationError):
        IdentifiabilityConfig.a1(0.0)
    with pytest.raises(ValidationError):
        IdentifiabilityConfig.a3(-1.0, 0.0)


def test_config_from_gamma_and_consistency():
    g = [[0.5, 0.1], [0.1, 0.4]]
    assert IdentifiabilityConfig.from_gamma(2, g) == IdentifiabilityConfig.a2(0.5, 0.1)
    assert IdentifiabilityConfig.from_gamma("A3", g) == IdentifiabilityConfig.a3(0.4, 0.1)
    assert IdentifiabilityConfig.from_gamma(1, [[0.5, 0], [0, 0.4]]).lam == pytest.approx(1.25)
    with pytest.raises(ValidationError):
        IdentifiabilityConfig.from_gamma(1, g)
    with pytest.raises(ValidationError):
        IdentifiabilityConfig.a3(0.3, 0.1).check_consistent(g)
    assert IdentifiabilityConfig.a3(0.4, 0.1).true_gamma(g) == 0.5
    assert IdentifiabilityConfig.a2(0.5, 0.1).true_gamma(g) == 0.4


def test_config_dict_roundtrip():
    c = IdentifiabilityConfig.a2(0.5, 0.1)
    assert IdentifiabilityConfig.from_dict(c.to_dict()) == c
    assert IdentifiabilityConfig.from_dict({"variant": 1, "lambda": 2.0}).lam == 2.0


def test_ground_truth_requires_pd_gamma():
    with pytest.raises(ValidationError):
        GroundTruth(2.0, 1.0, 0.5, np.zeros(3), [[1.0, 2.0], [2.0, 1.0]])


def test_csv_roundtrip(tmp_path):
    data = Dataset([0.1, 1 / 3, 2.0], [1e-300, -4.5, 7.0])
    path = tmp_path / "d.csv"
    write_csv(data, path)
    back = read_csv(path)
    assert np.array_equal(back.x, data.x) and np.array_equal(back.y, data.y)


def test_csv_errors_name_the_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n1,2\nabc,1\n3,4\n")
    with pytest.raises(ValidationError, match="line 3"):
        read_csv(path)
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValidationError, match="header"):
        read_csv(path)
