"""Seeded random draws, deterministic reductions and input validation.

All randomness flows through :class:`numpy.random.Generator` backed by the
PCG64 bit generator. Its output stream is fixed by the seed and identical
across platforms. Child streams for parallel sections are derived with
:meth:`numpy.random.SeedSequence.spawn`, never by sharing a generator.
"""

import numbers

import numpy as np

__all__ = [
    "make_rng",
    "spawn_rngs",
    "check_vector",
    "check_step",
    "check_weights",
    "gaussian_matrix",
    "sample_categorical",
    "deterministic_mean",
]

_WEIGHT_ATOL = 1e-12


def make_rng(seed=None):
    """Return a PCG64-backed generator.

    ``seed`` may be an int, a :class:`numpy.random.SeedSequence`, an existing
    generator (returned unchanged) or ``None`` for fresh OS entropy.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    if seed is not None and not isinstance(seed, numbers.Integral):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    return np.random.Generator(np.random.PCG64(seed))


def spawn_rngs(seed, count):
    """Derive ``count`` independent child generators from an integer seed.

    Child ``i`` is always the same stream for a given ``seed``, so work split
    across seeds or grid points stays reproducible regardless of scheduling.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def check_vector(x, name="x", size=None):
    """Validate a finite 1-D float64 vector and return it as an array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_step(step, name="step"):
    step = float(step)
    if not np.isfinite(step) or step <= 0.0:
        raise ValueError(f"{name} must be a positive finite number, got {step}")
    return step


def check_weights(weights):
    """Validate a probability vector (nonnegative, sums to one within 1e-12)."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty 1-D array")
    if not np.all(np.isfinite(w)) or np.any(w < 0.0):
        raise ValueError("weights must be finite and nonnegative")
    if abs(float(w.sum()) - 1.0) > _WEIGHT_ATOL:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    return w


def gaussian_matrix(rows, cols, variance, rng):
    """Matrix of i.i.d. zero-mean Gaussians with the given variance."""
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix shape must be positive, got ({rows}, {cols})")
    if variance < 0.0:
        raise ValueError("variance must be nonnegative")
    rng = make_rng(rng)
    return np.sqrt(variance) * rng.standard_normal((rows, cols))


def sample_categorical(weights, count, rng):
    """Draw ``count`` i.i.d. indices in ``[0, K)`` distributed as ``weights``.

    Inverse-CDF sampling on uniform draws, so the number of generator calls
    is exactly ``count`` whatever K is.
    """
    w = check_weights(weights)
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = make_rng(rng)
    cdf = np.cumsum(w)
    cdf[-1] = 1.0
    u = rng.random(count)
    idx = np.searchsorted(cdf, u, side="right")
    # zero-weight categories can never be hit: searchsorted skips flat cdf runs
    return np.minimum(idx, w.size - 1)


def deterministic_mean(vectors):
    """Elementwise mean accumulated left to right in input order."""
    vectors = list(vectors)
    if not vectors:
        raise ValueError("cannot average an empty sequence")
    acc = np.array(vectors[0], dtype=np.float64, copy=True)
    if acc.ndim != 1:
        raise ValueError("inputs must be 1-D vectors")
    for v in vectors[1:]:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != acc.shape:
            raise ValueError(f"length mismatch: {v.shape[0]} vs {acc.shape[0]}")
        acc += v
    acc /= len(vectors)
    return acc
