import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles_ref import grid_argmin_1d, grid_argmin_2d, tv_prox_reference
from signprox.prox import (
    L1Prox,
    LinearProx,
    NonnegProx,
    TV2DProx,
    ZeroProx,
    prox_l1,
    prox_linear,
    prox_nonneg,
    prox_tv2d,
    tv2d_value,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_prox_l1_examples():
    np.testing.assert_array_equal(prox_l1([0.0, 0.0], 1.0), [0.0, 0.0])
    assert prox_l1([2.0], 0.5)[0] == pytest.approx(grid_argmin_1d(lambda x: 0.5 * (x - 2) ** 2 + 0.5 * np.abs(x)), abs=1e-6)
    assert prox_l1([2.0], 0.5)[0] == pytest.approx(1.5)
    assert prox_l1([-0.3], 1.0)[0] == 0.0


def test_prox_l1_rejects_negative_threshold():
    with pytest.raises(ValueError):
        prox_l1([1.0], -0.1)


def test_prox_nonneg_examples():
    np.testing.assert_array_equal(prox_nonneg([1.0, 2.0]), [1.0, 2.0])
    np.testing.assert_array_equal(prox_nonneg([-1.0, 2.0]), [0.0, 2.0])
    np.testing.assert_array_equal(prox_nonneg([-5.0]), [0.0])


def test_prox_linear_examples():
    y = np.array([0.3, -1.2, 4.0])
    np.testing.assert_array_equal(prox_linear(y, np.zeros(3), 1.0), y)
    np.testing.assert_allclose(prox_linear([1.0, 1.0], [2.0, -1.0], 0.5), [0.0, 1.5])
    # additive constants and the anchor do not move the minimiser
    c, a = 7.3, -2.1
    ref = grid_argmin_1d(lambda x: 0.5 * (x - 3.0) ** 2 + 0.1 * (c + 1.0 * (x - a)))
    assert prox_linear([3.0], [1.0], 0.1)[0] == pytest.approx(ref, abs=1e-6)


def test_prox_linear_length_mismatch():
    with pytest.raises(ValueError):
        prox_linear([1.0, 2.0], [1.0], 0.1)


def test_tv_constant_image_is_fixed():
    y = np.full(12, 0.7)
    np.testing.assert_allclose(prox_tv2d(y, (3, 4), 5.0), y, atol=1e-12)


def test_tv_zero_strength_is_identity():
    y = np.random.default_rng(0).random(16)
    np.testing.assert_array_equal(prox_tv2d(y, (4, 4), 0.0), y)


def test_tv_dimension_mismatch():
    with pytest.raises(ValueError):
        prox_tv2d(np.zeros(10), (3, 3), 0.1)


def test_tv_value_counts_neighbour_differences():
    img = np.array([[0.0, 1.0], [3.0, 3.0]])
    # horizontal |1-0| + |3-3|, vertical |3-0| + |3-1|
    assert tv2d_value(img.ravel(), (2, 2)) == pytest.approx(1 + 0 + 3 + 2)


def test_tv_matches_dual_reference():
    rng = np.random.default_rng(42)
    y = rng.random(16)
    ref = tv_prox_reference(y, (4, 4), 0.3)
    np.testing.assert_allclose(prox_tv2d(y, (4, 4), 0.3), ref, atol=1e-4)


def test_tv_two_pixel_grid_optimality():
    y1, y2, tau = 0.2, 1.5, 0.4
    obj = lambda a, b: 0.5 * (a - y1) ** 2 + 0.5 * (b - y2) ** 2 + tau * np.abs(b - a)
    ref = grid_argmin_2d(obj)
    out = prox_tv2d(np.array([y1, y2]), (1, 2), tau, max_inner=5000, tol=1e-14)
    np.testing.assert_allclose(out, ref, atol=1e-6)


@pytest.mark.parametrize(
    "op",
    [ZeroProx(), L1Prox(0.7), NonnegProx(), LinearProx(np.linspace(-1, 1, 50)), TV2DProx(0.5, (5, 10), 2000, 1e-12)],
    ids=lambda op: op.name,
)
def test_nonexpansive(op):
    rng = np.random.default_rng(123)
    for _ in range(200):
        u, v = rng.standard_normal(50) * 3, rng.standard_normal(50) * 3
        assert np.linalg.norm(op(u, 0.8) - op(v, 0.8)) <= np.linalg.norm(u - v) + 1e-10


def test_convex_combination_of_proxes_is_nonexpansive():
    ops = [L1Prox(1.0), NonnegProx(), ZeroProx(), TV2DProx(0.3, (5, 10), 2000, 1e-12)]
    theta = np.array([0.1, 0.4, 0.2, 0.3])
    rng = np.random.default_rng(9)

    def avg(y):
        return sum(t * op(y, 0.5) for t, op in zip(theta, ops))

    for _ in range(100):
        u, v = rng.standard_normal(50), rng.standard_normal(50)
        assert np.linalg.norm(avg(u) - avg(v)) <= np.linalg.norm(u - v) + 1e-10


@settings(max_examples=200, deadline=None)
@given(y=finite, t=st.floats(0, 10))
def test_l1_is_soft_threshold(y, t):
    out = prox_l1([y], t)[0]
    assert abs(out) <= abs(y)
    assert out == 0.0 or np.sign(out) == np.sign(y)
    assert out == pytest.approx(np.sign(y) * max(abs(y) - t, 0.0))


@settings(max_examples=50, deadline=None)
@given(y=arrays(np.float64, 12, elements=st.floats(-5, 5)), s=st.floats(0.0, 2.0))
def test_tv_never_increases_tv_or_shifts_mean(y, s):
    out = prox_tv2d(y, (3, 4), s, max_inner=500, tol=1e-12)
    assert tv2d_value(out, (3, 4)) <= tv2d_value(y, (3, 4)) + 1e-8
    # the difference operator annihilates constants, so the mean is preserved
    assert out.mean() == pytest.approx(y.mean(), abs=1e-9)
