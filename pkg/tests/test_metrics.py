import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hvsbench import l1_distance, l2_distance, s_ac


def test_identical_vectors_give_exact_zero():
    v = np.array([0.3, -1.2, 4.5, 0.0])
    assert s_ac(v, v) == 0.0
    assert s_ac(v, v.copy()) == 0.0


def test_antipodal_vectors_give_exact_one():
    v = np.array([0.3, -1.2, 4.5, 1e-7])
    assert s_ac(v, -v) == 1.0


def test_orthogonal_vectors_give_half():
    assert abs(s_ac([1.0, 0.0], [0.0, 1.0]) - 0.5) < 1e-12
    assert abs(s_ac([2.0, 0.0, 0.0], [0.0, 0.0, 7.0]) - 0.5) < 1e-12


def test_known_angles_recovered():
    # construct unit vectors at a known angle; S_ac must be theta/pi
    for theta in [1e-9, 1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0, 3.0,
                  math.pi - 1e-6, math.pi - 1e-9]:
        u = np.array([1.0, 0.0])
        v = np.array([math.cos(theta), math.sin(theta)])
        assert abs(s_ac(u, v) - theta / math.pi) < 1e-12


def test_agrees_with_arccos_formulation_away_from_limits():
    # independent oracle at extended precision, safe in mid-range angles
    rng = np.random.default_rng(7)
    for _ in range(200):
        a = rng.standard_normal(64)
        b = rng.standard_normal(64)
        cosine = np.dot(a.astype(np.longdouble), b.astype(np.longdouble))
        cosine /= (np.linalg.norm(a.astype(np.longdouble))
                   * np.linalg.norm(b.astype(np.longdouble)))
        expected = float(np.arccos(np.clip(cosine, -1.0, 1.0)) / np.pi)
        assert abs(s_ac(a, b) - expected) < 1e-12


def test_errors():
    with pytest.raises(ValueError, match="mismatch"):
        s_ac([1.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError, match="zero-norm"):
        s_ac([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(ValueError, match="zero-norm"):
        s_ac([1.0, 0.0], [0.0, 0.0])
    with pytest.raises(ValueError, match="empty"):
        s_ac([], [])
    with pytest.raises(ValueError, match="non-finite"):
        s_ac([1.0, np.nan], [1.0, 2.0])
    with pytest.raises(ValueError, match="non-finite"):
        s_ac([1.0, 2.0], [np.inf, 2.0])


def test_float32_inputs_are_accumulated_at_float64():
    rng = np.random.default_rng(11)
    a = rng.standard_normal(150528).astype(np.float32)
    b = rng.standard_normal(150528).astype(np.float32)
    assert s_ac(a, b) == s_ac(a.astype(np.float64), b.astype(np.float64))


def test_multidimensional_inputs_are_flattened():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((4, 5))
    b = rng.standard_normal((4, 5))
    assert s_ac(a, b) == s_ac(a.ravel(), b.ravel())


@settings(max_examples=150, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=32),
       st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=32))
def test_range_and_symmetry(xs, ys):
    n = min(len(xs), len(ys))
    a = np.asarray(xs[:n])
    b = np.asarray(ys[:n])
    if np.linalg.norm(a) == 0 or np.linalg.norm(b) == 0:
        return
    d = s_ac(a, b)
    assert 0.0 <= d <= 1.0
    assert s_ac(b, a) == d


@settings(max_examples=150, deadline=None)
@given(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6),
       st.integers(0, 2 ** 31 - 1))
def test_positive_scale_invariance(sa, sb, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(16)
    b = rng.standard_normal(16)
    assert abs(s_ac(sa * a, sb * b) - s_ac(a, b)) < 1e-12


def test_l1_l2_examples():
    assert l2_distance([0.0, 3.0, 4.0], [0.0, 0.0, 0.0]) == 5.0
    assert l1_distance([1.0, 1.0, 1.0], [0.0, 0.0, 0.0]) == 3.0
    v = np.array([2.0, -1.0, 0.5])
    assert l1_distance(v, v) == 0.0
    assert l2_distance(v, v) == 0.0
    with pytest.raises(ValueError, match="mismatch"):
        l1_distance([1.0], [1.0, 2.0])
    with pytest.raises(ValueError, match="mismatch"):
        l2_distance([1.0], [1.0, 2.0])
