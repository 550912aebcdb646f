"""Proximal-gradient maps and their stochastic estimates.

For a problem ``f = d + r`` with a weighted family of regularizers ``r_k``:

* ``prox_grad_component`` is ``prox_{step r_k}(x - step * grad d(x))``,
* ``prox_grad_full`` is the ``weights``-average of those,
* ``prox_grad_minibatch`` averages a mini-batch of i.i.d. sampled components,
* ``noisy_prox_oracle`` perturbs the full map with Bernoulli-Gaussian noise,
* ``gradient_mapping`` is ``(x - prox_grad_full(x)) / step``.

Component indices are zero-based. Averages are accumulated in a fixed order
so every estimate is bit-reproducible for a given generator state.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ._numerics import (
    check_step,
    check_vector,
    check_weights,
    deterministic_mean,
    make_rng,
    sample_categorical,
)
from .prox import LinearizedProx, ProxOperator

__all__ = [
    "Problem",
    "NoiseModel",
    "ProxGradOracle",
    "ExactOracle",
    "MinibatchOracle",
    "NoisyOracle",
    "prox_grad_component",
    "prox_grad_full",
    "prox_grad_minibatch",
    "noisy_prox_oracle",
    "gradient_mapping",
    "sign",
    "linearized_problem",
]


@dataclass(frozen=True, eq=False)
class Problem:
    """``f(x) = d(x) + sum_k weights[k] * r_k(x)``.

    ``lipschitz`` and ``coord_lipschitz`` are optional exact smoothness
    constants of ``d``; when absent they are estimated by the theory harness.
    """

    smooth_value: Callable[[np.ndarray], float]
    smooth_grad: Callable[[np.ndarray], np.ndarray]
    components: Sequence[ProxOperator]
    weights: np.ndarray
    dim: int
    lipschitz: Optional[float] = None
    coord_lipschitz: Optional[np.ndarray] = None
    name: str = "problem"
    objective: Optional[Callable[[np.ndarray], float]] = field(default=None, repr=False)

    def __post_init__(self):
        w = check_weights(self.weights)
        if len(self.components) != w.size:
            raise ValueError(
                f"{len(self.components)} components but {w.size} weights"
            )
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", tuple(self.components))
        if self.coord_lipschitz is not None:
            cl = check_vector(self.coord_lipschitz, "coord_lipschitz", self.dim)
            if np.any(cl < 0):
                raise ValueError("coord_lipschitz must be nonnegative")
            object.__setattr__(self, "coord_lipschitz", cl)

    @property
    def n_components(self):
        return len(self.components)

    def value(self, x):
        """Objective value; ``objective`` overrides ``d + sum theta_k r_k``."""
        if self.objective is not None:
            return float(self.objective(x))
        total = float(self.smooth_value(x))
        for w, comp in zip(self.weights, self.components):
            if w > 0:
                total += w * comp.value(x)
        return total

    def gradient_step(self, x, step):
        g = np.asarray(self.smooth_grad(x), dtype=np.float64)
        if g.shape != (self.dim,):
            raise ValueError(f"smooth_grad returned shape {g.shape}, expected ({self.dim},)")
        return x - step * g


@dataclass(frozen=True)
class NoiseModel:
    """Bernoulli-Gaussian perturbation ``rho * N(0, sd^2) + (1 - rho) * delta_0``.

    The Gaussian std is ``step * sigma / sqrt(rho)``, which keeps the overall
    elementwise std at ``step * sigma`` for every sparsity level ``rho``.
    """

    rho: float = 1.0
    sigma: float = 0.1

    def __post_init__(self):
        if not (0.0 < self.rho <= 1.0):
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")
        if self.sigma < 0.0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")

    def spike_std(self, step):
        return step * self.sigma / np.sqrt(self.rho)

    def draw(self, size, step, rng):
        # both arrays are always drawn so the stream advances identically
        spikes = rng.random(size) < self.rho
        gauss = rng.standard_normal(size)
        return np.where(spikes, self.spike_std(step) * gauss, 0.0)


def _check_index(problem, k):
    if not (0 <= k < problem.n_components):
        raise IndexError(f"component index {k} out of range [0, {problem.n_components})")


def prox_grad_component(problem, k, x, step):
    """Gradient step on the smooth term followed by the prox of component ``k``."""
    _check_index(problem, k)
    step = check_step(step)
    x = check_vector(x, "x", problem.dim)
    return problem.components[k](problem.gradient_step(x, step), step)


def prox_grad_full(problem, x, step):
    step = check_step(step)
    x = check_vector(x, "x", problem.dim)
    z = problem.gradient_step(x, step)
    acc = np.zeros(problem.dim)
    for w, comp in zip(problem.weights, problem.components):
        if w > 0:
            acc += w * comp(z, step)
    return acc


def prox_grad_minibatch(problem, x, step, batch, rng):
    """Average of ``batch`` component maps with indices drawn i.i.d. from the weights."""
    if batch < 1:
        raise ValueError(f"batch must be >= 1, got {batch}")
    step = check_step(step)
    x = check_vector(x, "x", problem.dim)
    idx = sample_categorical(problem.weights, batch, make_rng(rng))
    z = problem.gradient_step(x, step)
    cache = {}
    for k in idx:
        if k not in cache:
            cache[k] = problem.components[k](z, step)
    return deterministic_mean(cache[k] for k in idx)


def noisy_prox_oracle(problem, noise, x, step, rng):
    """``prox_grad_full(x)`` plus one Bernoulli-Gaussian noise vector."""
    p = prox_grad_full(problem, x, step)
    return p + noise.draw(problem.dim, step, make_rng(rng))


def gradient_mapping(problem, x, step):
    x = check_vector(x, "x", problem.dim)
    step = check_step(step)
    return (x - prox_grad_full(problem, x, step)) / step


def sign(v):
    """Elementwise sign with ``sign(0) == 0``."""
    return np.sign(np.asarray(v, dtype=np.float64))


class ProxGradOracle:
    """Source of stochastic estimates of ``prox_grad_full``."""

    unbiased = True

    def __init__(self, problem):
        self.problem = problem

    def estimate(self, x, step, batch, rng):
        raise NotImplementedError

    def full(self, x, step):
        return prox_grad_full(self.problem, x, step)


class ExactOracle(ProxGradOracle):
    """Deterministic oracle returning the full map (no randomness consumed)."""

    def estimate(self, x, step, batch, rng):
        return prox_grad_full(self.problem, x, step)


class MinibatchOracle(ProxGradOracle):
    def estimate(self, x, step, batch, rng):
        return prox_grad_minibatch(self.problem, x, step, batch, rng)


class NoisyOracle(ProxGradOracle):
    """Full map plus noise; a batch averages ``batch`` independent noise draws."""

    def __init__(self, problem, noise):
        super().__init__(problem)
        self.noise = noise

    def estimate(self, x, step, batch, rng):
        if batch < 1:
            raise ValueError(f"batch must be >= 1, got {batch}")
        rng = make_rng(rng)
        p = prox_grad_full(self.problem, x, step)
        if batch == 1:
            return p + self.noise.draw(self.problem.dim, step, rng)
        draws = [self.noise.draw(self.problem.dim, step, rng) for _ in range(batch)]
        return p + deterministic_mean(draws)


def linearized_problem(component_grads, weights, dim, component_funcs=None):
    """Zero smooth term with each ``r_k`` the linear model of ``f_k``.

    SignProx on this problem takes exactly the signSGD steps on
    ``sum_k weights[k] * f_k``.
    """
    funcs = component_funcs or [None] * len(component_grads)
    comps = [LinearizedProx(g, f) for g, f in zip(component_grads, funcs)]
    w = check_weights(weights)
    if component_funcs is None:
        def objective(x):
            return float("nan")
    else:
        def objective(x):
            return float(sum(wk * fk(x) for wk, fk in zip(w, component_funcs)))
    return Problem(
        smooth_value=lambda x: 0.0,
        smooth_grad=lambda x: np.zeros(dim),
        components=comps,
        weights=w,
        dim=dim,
        name="linearized",
        objective=objective,
    )
