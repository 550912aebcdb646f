import numpy as np
import pytest
from scipy import stats

from signprox._numerics import (
    check_weights,
    deterministic_mean,
    gaussian_matrix,
    make_rng,
    sample_categorical,
    spawn_rngs,
)


def test_gaussian_matrix_zero_variance():
    np.testing.assert_array_equal(gaussian_matrix(2, 2, 0.0, make_rng(3)), np.zeros((2, 2)))


@pytest.mark.parametrize("shape", [(0, 3), (3, 0)])
def test_gaussian_matrix_rejects_empty(shape):
    with pytest.raises(ValueError):
        gaussian_matrix(*shape, 1.0, make_rng(0))


def test_gaussian_matrix_moments():
    v = 1.0 / 3000
    M = gaussian_matrix(1000, 1000, v, make_rng(7))
    assert abs(M.mean()) <= 1e-3
    assert abs(M.var() / v - 1.0) <= 0.05
    z = M.ravel() / np.sqrt(v)
    assert abs(stats.skew(z)) < 0.05
    assert abs(stats.kurtosis(z)) < 0.1


def test_gaussian_matrix_reproducible():
    a = gaussian_matrix(20, 30, 0.5, make_rng(11))
    b = gaussian_matrix(20, 30, 0.5, make_rng(11))
    assert np.array_equal(a, b)


def test_sample_categorical_degenerate():
    rng = make_rng(0)
    assert sample_categorical([1.0], 5, rng).tolist() == [0] * 5
    # zero-based: the middle category of three
    assert sample_categorical([0.0, 1.0, 0.0], 3, rng).tolist() == [1, 1, 1]


def test_sample_categorical_frequency():
    idx = sample_categorical([0.5, 0.5], 100_000, make_rng(1))
    assert 0.495 <= np.mean(idx == 0) <= 0.505


def test_sample_categorical_reproducible():
    w = [0.2, 0.3, 0.5]
    assert np.array_equal(sample_categorical(w, 50, make_rng(4)), sample_categorical(w, 50, make_rng(4)))


@pytest.mark.parametrize("weights", [[0.5, 0.6], [-0.1, 1.1], [], [np.nan, 1.0]])
def test_weights_rejected(weights):
    with pytest.raises(ValueError):
        check_weights(weights)


def test_sample_categorical_rejects_zero_count():
    with pytest.raises(ValueError):
        sample_categorical([1.0], 0, make_rng(0))


def test_deterministic_mean_examples():
    np.testing.assert_array_equal(deterministic_mean([np.array([1.0, 2.0])]), [1.0, 2.0])
    np.testing.assert_array_equal(deterministic_mean([[0.0, 0.0], [2.0, 4.0]]), [1.0, 2.0])


def test_deterministic_mean_permutation_stability():
    rng = np.random.default_rng(0)
    vecs = [rng.standard_normal(50) for _ in range(100)]
    perm = rng.permutation(100)
    a = deterministic_mean(vecs)
    b = deterministic_mean([vecs[i] for i in perm])
    assert np.max(np.abs(a - b)) <= 1e-12


def test_deterministic_mean_errors():
    with pytest.raises(ValueError):
        deterministic_mean([])
    with pytest.raises(ValueError):
        deterministic_mean([[1.0, 2.0], [1.0]])


def test_spawned_streams_are_stable_and_distinct():
    a = [g.random(3) for g in spawn_rngs(5, 3)]
    b = [g.random(3) for g in spawn_rngs(5, 3)]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not np.array_equal(a[0], a[1])
