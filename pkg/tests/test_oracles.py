import numpy as np
import pytest

from conftest import quadratic_problem, zero_smooth_problem
from oracles_ref import grid_argmin_1d
from signprox._numerics import make_rng
from signprox.oracles import (
    NoiseModel,
    NoisyOracle,
    gradient_mapping,
    noisy_prox_oracle,
    prox_grad_component,
    prox_grad_full,
    prox_grad_minibatch,
    sign,
)
from signprox.prox import L1Prox, LinearProx, NonnegProx, ZeroProx
from signprox.solvers import run_pgm_reference


def test_component_with_linear_regularizer_is_sgd_step():
    g = np.array([0.5, -2.0, 1.0])
    p = zero_smooth_problem(3, [LinearProx(g)])
    x = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(prox_grad_component(p, 0, x, 0.2), x - 0.2 * g)


def test_component_gradient_step_only():
    p = quadratic_problem(2)
    np.testing.assert_allclose(prox_grad_component(p, 0, np.array([1.0, 1.0]), 0.1), [0.9, 0.9])


def test_component_l1_against_grid():
    p = zero_smooth_problem(2, [L1Prox(1.0)])
    out = prox_grad_component(p, 0, np.array([2.0, -0.5]), 1.0)
    ref = [grid_argmin_1d(lambda z, y=y: 0.5 * (z - y) ** 2 + np.abs(z)) for y in (2.0, -0.5)]
    np.testing.assert_allclose(out, ref, atol=1e-6)
    np.testing.assert_allclose(out, [1.0, 0.0])


def test_component_index_checked():
    p = quadratic_problem(2)
    with pytest.raises(IndexError):
        prox_grad_component(p, 1, np.zeros(2), 0.1)


def test_full_map_single_and_identical_components():
    x = np.array([0.4, -1.3, 2.2])
    p1 = quadratic_problem(3, [L1Prox(0.3)])
    np.testing.assert_array_equal(prox_grad_full(p1, x, 0.5), prox_grad_component(p1, 0, x, 0.5))
    p3 = quadratic_problem(3, [L1Prox(0.3)] * 3, weights=np.array([0.2, 0.3, 0.5]))
    np.testing.assert_allclose(prox_grad_full(p3, x, 0.5), prox_grad_component(p3, 1, x, 0.5), atol=1e-15)


def test_full_map_hand_average():
    p = zero_smooth_problem(1, [L1Prox(1.0), ZeroProx()], np.array([0.5, 0.5]))
    # components give 1 and 2
    np.testing.assert_allclose(prox_grad_full(p, np.array([2.0]), 1.0), [1.5])


def test_minibatch_degenerate_distribution():
    p = quadratic_problem(2, [L1Prox(0.1), L1Prox(0.5)], weights=np.array([0.0, 1.0]))
    x = np.array([1.0, -2.0])
    np.testing.assert_array_equal(
        prox_grad_minibatch(p, x, 0.3, 1, make_rng(0)), prox_grad_component(p, 1, x, 0.3)
    )


def test_minibatch_rejects_zero_batch():
    with pytest.raises(ValueError):
        prox_grad_minibatch(quadratic_problem(2), np.zeros(2), 0.1, 0, make_rng(0))


def _lasso_like(rng):
    lam = np.array([0.1, 0.4, 0.9, 1.5])
    return quadratic_problem(6, [L1Prox(v) for v in lam], weights=np.array([0.1, 0.2, 0.3, 0.4]),
                             center=rng.standard_normal(6) * 3)


def test_minibatch_unbiased(rng):
    p = _lasso_like(rng)
    N = 10_000
    for _ in range(10):
        x = rng.standard_normal(6) * 3
        draws = np.array([prox_grad_minibatch(p, x, 0.4, 1, rng) for _ in range(N)])
        bound = 4 * draws.std(axis=0).max() / np.sqrt(N)
        assert np.max(np.abs(draws.mean(axis=0) - prox_grad_full(p, x, 0.4))) <= bound


def test_minibatch_variance_shrinks_with_batch(rng):
    p = _lasso_like(rng)
    x = np.array([3.0, -4.0, 2.5, 5.0, -3.5, 4.0])
    v1 = np.array([prox_grad_minibatch(p, x, 0.4, 1, rng) for _ in range(20_000)]).var(axis=0)
    for B in (4, 16):
        vB = np.array([prox_grad_minibatch(p, x, 0.4, B, rng) for _ in range(20_000)]).var(axis=0)
        assert np.all(np.abs(v1 / vB / B - 1) <= 0.2)


def test_variance_scales_with_step_squared(rng):
    p = _lasso_like(rng)
    # away from kinks the deviation is exactly step * (mean lambda - lambda_k)
    x = np.array([10.0, -9.0, 8.0, 12.0, -11.0, 9.5])

    def spread(step):
        full = prox_grad_full(p, x, step)
        return sum(w * np.sum((prox_grad_component(p, k, x, step) - full) ** 2)
                   for k, w in enumerate(p.weights))

    assert 0.2 <= spread(0.25) / spread(0.5) <= 0.3


def test_noisy_oracle_zero_sigma_is_exact(rng):
    p = quadratic_problem(4, [L1Prox(0.2)])
    x = rng.standard_normal(4)
    out = noisy_prox_oracle(p, NoiseModel(0.5, 0.0), x, 0.3, rng)
    np.testing.assert_array_equal(out, prox_grad_full(p, x, 0.3))


@pytest.mark.parametrize("rho", [1.0, 0.1])
def test_noisy_oracle_statistics(rho):
    dim, step, N = 8, 0.3, 100_000
    p = quadratic_problem(dim, [L1Prox(0.2)])
    oracle = NoisyOracle(p, NoiseModel(rho, 0.1))
    rng = make_rng(17)
    x = np.linspace(-1, 1, dim)
    full = prox_grad_full(p, x, step)
    e = np.array([oracle.estimate(x, step, 1, rng) for _ in range(N)]) - full
    np.testing.assert_allclose(e.std(axis=0), step * 0.1, rtol=0.05)
    assert abs(np.mean(e != 0.0) - rho) <= 0.01
    assert np.max(np.abs(e.mean(axis=0))) <= 4 * e.std(axis=0).max() / np.sqrt(N)


@pytest.mark.parametrize("rho", [0.0, 1.5, -0.2])
def test_noise_model_rejects_bad_rho(rho):
    with pytest.raises(ValueError):
        NoiseModel(rho, 0.1)


def test_noise_spike_std():
    nm = NoiseModel(0.25, 0.1)
    assert nm.spike_std(0.2) == pytest.approx(0.2 * 0.1 / 0.5)


def test_gradient_mapping_without_regularizer_is_gradient(rng):
    c = rng.standard_normal(5)
    p = quadratic_problem(5, center=c)
    x = rng.standard_normal(5)
    np.testing.assert_allclose(gradient_mapping(p, x, 0.37), x - c, atol=1e-14)


def test_gradient_mapping_l1_origin():
    p = zero_smooth_problem(1, [L1Prox(1.0)])
    np.testing.assert_array_equal(gradient_mapping(p, np.zeros(1), 0.5), [0.0])


def test_gradient_mapping_vanishes_at_lasso_minimizer(lasso_fixture):
    p = lasso_fixture.merged_problem()
    ref = run_pgm_reference(p, np.zeros(p.dim), 1.0, max_iter=100_000, tol=1e-12)
    assert np.linalg.norm(gradient_mapping(p, ref.x, 0.5)) <= 1e-6


def test_gradient_mapping_zero_iff_fixed_point():
    p = zero_smooth_problem(3, [NonnegProx()])
    x_fixed = np.array([0.0, 1.0, 2.0])
    x_moved = np.array([-1.0, 1.0, 2.0])
    assert np.all(gradient_mapping(p, x_fixed, 0.3) == 0)
    assert np.array_equal(prox_grad_full(p, x_fixed, 0.3), x_fixed)
    assert np.any(gradient_mapping(p, x_moved, 0.3) != 0)


def test_full_map_nonexpansive_without_smooth_term(rng):
    p = zero_smooth_problem(50, [L1Prox(0.5), NonnegProx(), ZeroProx()], np.array([0.3, 0.3, 0.4]))
    for _ in range(200):
        u, v = rng.standard_normal(50), rng.standard_normal(50)
        assert np.linalg.norm(prox_grad_full(p, u, 0.7) - prox_grad_full(p, v, 0.7)) <= np.linalg.norm(u - v) + 1e-10


def test_sign_convention():
    np.testing.assert_array_equal(sign([-2.5, 0.0, 3.0]), [-1.0, 0.0, 1.0])
    np.testing.assert_array_equal(sign(np.zeros(4)), np.zeros(4))
    v = np.random.default_rng(1).standard_normal(10)
    np.testing.assert_array_equal(sign(-v), -sign(v))
