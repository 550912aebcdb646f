"""Iterative solvers: SPGM, signProx, signSGD and deterministic prox-gradient.

Every solver returns a :class:`Trace` holding ``T + 1`` records (``t = 0``
is the starting point). Runs are fully determined by the problem, the
starting point, the schedule and the generator seed.
"""

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from ._numerics import (
    check_step,
    check_vector,
    check_weights,
    deterministic_mean,
    make_rng,
    sample_categorical,
)
from .oracles import gradient_mapping, prox_grad_full, sign

__all__ = [
    "Schedule",
    "Trace",
    "ReferenceResult",
    "DivergenceError",
    "GRID_STEPS",
    "run_spgm",
    "run_signprox",
    "run_signsgd",
    "run_pgm_reference",
    "grid_search_step",
]

#: log-spaced step sizes 1e-4 ... 1 used when the step is tuned by grid search
GRID_STEPS = tuple(float(s) for s in np.logspace(-4.0, 0.0, 13))

_SYMBOLIC_STEPS = ("theorem1", "theorem2", "grid")
_DIVERGENCE_FACTOR = 1e6
_QUADRATIC_BATCH_WARN = 512


class DivergenceError(RuntimeError):
    """Raised when an iterate blows up; carries the partial trace."""

    def __init__(self, iteration, reason, trace=None):
        super().__init__(f"diverged at iteration {iteration}: {reason}")
        self.iteration = iteration
        self.trace = trace


@dataclass(frozen=True)
class Schedule:
    """Step size, mini-batch size and iteration budget.

    ``step`` may be a number or one of ``"theorem1"``, ``"theorem2"``,
    ``"grid"``; ``batch`` may be an int or ``"T"``. Use :meth:`resolve` to turn
    the symbolic forms into numbers.
    """

    step: Union[float, str] = 1e-2
    batch: Union[int, str] = 1
    iterations: int = 100

    def __post_init__(self):
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError(f"iterations must be a positive integer, got {self.iterations}")
        if isinstance(self.step, str):
            if self.step not in _SYMBOLIC_STEPS:
                raise ValueError(f"unknown symbolic step {self.step!r}")
        else:
            check_step(self.step)
        if isinstance(self.batch, str):
            if self.batch != "T":
                raise ValueError(f"batch must be an integer or 'T', got {self.batch!r}")
        elif int(self.batch) != self.batch or self.batch < 1:
            raise ValueError(f"batch must be >= 1, got {self.batch}")

    @property
    def is_resolved(self):
        return not isinstance(self.step, str) and not isinstance(self.batch, str)

    def resolve(self, lipschitz=None, coord_lipschitz=None):
        """Numeric schedule.

        ``"theorem1"`` gives ``1 / (L sqrt(T))``; ``"theorem2"`` gives
        ``1 / (2 ||L||_1 sqrt(T))`` together with ``B = T``. ``"grid"`` cannot
        be resolved here, see :func:`grid_search_step`.
        """
        T = int(self.iterations)
        step, batch = self.step, self.batch
        if step == "theorem1":
            if lipschitz is None:
                raise ValueError("theorem1 step needs the Lipschitz constant L")
            step = 1.0 / (lipschitz * math.sqrt(T))
        elif step == "theorem2":
            if coord_lipschitz is None:
                raise ValueError("theorem2 step needs the coordinate Lipschitz vector")
            l1 = float(np.sum(np.abs(coord_lipschitz)))
            step = 1.0 / (2.0 * l1 * math.sqrt(T))
            batch = T
        elif step == "grid":
            raise ValueError("grid steps are resolved by grid_search_step")
        if batch == "T":
            batch = T
        if batch > _QUADRATIC_BATCH_WARN and batch == T:
            warnings.warn(
                f"batch = T = {T} costs T^2 oracle calls", RuntimeWarning, stacklevel=2
            )
        return replace(self, step=float(step), batch=int(batch))


@dataclass
class Trace:
    """Per-iteration log of a solver run.

    Arrays have one entry per record ``t = 0 .. T``. ``bits_cumulative`` is the
    number of bits a worker would have transmitted up to iteration ``t``.
    """

    t: np.ndarray
    f: np.ndarray
    normalized_obj: np.ndarray
    gmap_l2sq: np.ndarray
    gmap_l1: np.ndarray
    bits_cumulative: np.ndarray
    x: Optional[np.ndarray] = None
    algorithm: str = ""
    step: float = float("nan")
    batch: int = 1
    f_star: Optional[float] = None
    encoding: str = "float64"
    dim: int = 0
    meta: dict = field(default_factory=dict)

    COLUMNS = ("t", "f", "normalized_obj", "gmap_l2sq", "gmap_l1", "bits_cumulative")

    def __len__(self):
        return len(self.t)

    @property
    def iterations(self):
        return len(self.t) - 1

    @property
    def final_normalized_objective(self):
        return float(self.normalized_obj[-1])

    def columns(self):
        return {c: getattr(self, c) for c in self.COLUMNS}


@dataclass
class ReferenceResult:
    x: np.ndarray
    f: float
    converged: bool
    iterations: int
    gmap_norm: float

    def __iter__(self):
        # allows ``x_star, f_star = run_pgm_reference(...)``
        return iter((self.x, self.f))


class _Recorder:
    def __init__(self, T, f_star, bits_per_iter):
        self.f_star = f_star
        self.bits_per_iter = bits_per_iter
        self.t = []
        self.f = []
        self.g2 = []
        self.g1 = []
        self.f0 = None

    def add(self, t, fval, g):
        if self.f0 is None:
            self.f0 = fval
        self.t.append(t)
        self.f.append(fval)
        if g is None:
            self.g2.append(np.nan)
            self.g1.append(np.nan)
        else:
            self.g2.append(float(g @ g))
            self.g1.append(float(np.abs(g).sum()))

    def normalized(self):
        f = np.asarray(self.f, dtype=np.float64)
        if self.f_star is None:
            return np.full_like(f, np.nan)
        denom = self.f0 - self.f_star
        if denom == 0:
            return np.full_like(f, np.nan)
        out = (f - self.f_star) / denom
        out[0] = 1.0
        return out

    def build(self, x, **meta):
        t = np.asarray(self.t, dtype=np.int64)
        return Trace(
            t=t,
            f=np.asarray(self.f, dtype=np.float64),
            normalized_obj=self.normalized(),
            gmap_l2sq=np.asarray(self.g2, dtype=np.float64),
            gmap_l1=np.asarray(self.g1, dtype=np.float64),
            bits_cumulative=t * self.bits_per_iter,
            x=None if x is None else x.copy(),
            f_star=self.f_star,
            **meta,
        )


def _iterate(update, value, gmap, x0, schedule, f_star, encoding, algorithm, track_gmap):
    if not schedule.is_resolved:
        raise ValueError("schedule must be resolved to numbers before running")
    step, T = schedule.step, int(schedule.iterations)
    x = check_vector(x0, "x0").copy()
    n = x.size
    bits = n * (1 if encoding == "sign1bit" else 64)
    rec = _Recorder(T, f_star, bits)
    meta = dict(algorithm=algorithm, step=step, batch=int(schedule.batch), encoding=encoding, dim=n)
    rec.add(0, value(x), gmap(x) if track_gmap else None)
    limit = _DIVERGENCE_FACTOR * max(abs(rec.f0), 1.0) if np.isfinite(rec.f0) else np.inf
    for t in range(1, T + 1):
        x = update(x)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(t, "non-finite iterate", rec.build(None, **meta))
        fval = value(x)
        if fval > limit:
            raise DivergenceError(t, f"objective {fval:.3e} exceeds guard {limit:.3e}", rec.build(None, **meta))
        rec.add(t, fval, gmap(x) if track_gmap else None)
    return rec.build(x, **meta)


def run_spgm(problem, oracle, x0, schedule, rng, f_star=None, track_gmap=True):
    """Stochastic proximal-gradient method: ``x <- estimate(x)``."""
    rng = make_rng(rng)
    step, B = schedule.step, int(schedule.batch)

    def update(x):
        return oracle.estimate(x, step, B, rng)

    return _iterate(
        update,
        problem.value,
        lambda x: gradient_mapping(problem, x, step),
        x0,
        schedule,
        f_star,
        "float64",
        "spgm",
        track_gmap,
    )


def run_signprox(problem, oracle, x0, schedule, rng, f_star=None, track_gmap=True):
    """One-bit update ``x <- x - step * sign(x - estimate(x))``."""
    rng = make_rng(rng)
    step, B = schedule.step, int(schedule.batch)

    def update(x):
        return x - step * sign(x - oracle.estimate(x, step, B, rng))

    return _iterate(
        update,
        problem.value,
        lambda x: gradient_mapping(problem, x, step),
        x0,
        schedule,
        f_star,
        "sign1bit",
        "signprox",
        track_gmap,
    )


def run_signsgd(component_grads, weights, x0, schedule, rng, component_funcs=None,
                f_star=None, track_gmap=True):
    """signSGD on ``sum_k weights[k] * f_k`` with mini-batch gradients.

    ``component_grads[k]`` maps ``x`` to the gradient of ``f_k``. Components
    are drawn with the same sampler as the proximal solvers, so the two
    consume identical random streams. The gradient-mapping columns of the
    trace hold the full gradient, which is what the gradient mapping of the
    linearized problem reduces to.
    """
    rng = make_rng(rng)
    w = check_weights(weights)
    if len(component_grads) != w.size:
        raise ValueError(f"{len(component_grads)} gradients but {w.size} weights")
    step, B = schedule.step, int(schedule.batch)

    def update(x):
        idx = sample_categorical(w, B, rng)
        cache = {}
        for k in idx:
            if k not in cache:
                cache[k] = np.asarray(component_grads[k](x), dtype=np.float64)
        return x - step * sign(deterministic_mean(cache[k] for k in idx))

    def full_grad(x):
        acc = np.zeros_like(x)
        for wk, gk in zip(w, component_grads):
            if wk > 0:
                acc += wk * np.asarray(gk(x), dtype=np.float64)
        return acc

    if component_funcs is None:
        def value(x):
            return float("nan")
    else:
        def value(x):
            return float(sum(wk * fk(x) for wk, fk in zip(w, component_funcs)))

    return _iterate(update, value, full_grad, x0, schedule, f_star, "sign1bit", "signsgd", track_gmap)


def run_pgm_reference(problem, x0, step, max_iter=10000, tol=1e-8):
    """Deterministic proximal-gradient iterations ``x <- P(x)``.

    Stops once the gradient mapping has Euclidean norm below ``tol``. Hitting
    ``max_iter`` first is reported through ``converged=False`` rather than
    raised.
    """
    step = check_step(step)
    x = check_vector(x0, "x0", problem.dim).copy()
    gnorm = np.inf
    it = 0
    for it in range(max_iter + 1):
        p = prox_grad_full(problem, x, step)
        gnorm = float(np.linalg.norm((x - p) / step))
        if gnorm < tol or it == max_iter:
            break
        x = p
    return ReferenceResult(
        x=x, f=problem.value(x), converged=gnorm < tol, iterations=it, gmap_norm=gnorm
    )


def grid_search_step(solver, problem, oracle, x0, schedule, seed, f_star, steps=GRID_STEPS):
    """Pick the step with the lowest final normalized objective.

    ``solver`` is :func:`run_spgm` or :func:`run_signprox`. Each grid point
    reruns from the same seed. Diverging steps are skipped. Returns
    ``(best_step, {step: final_normalized_objective})``.
    """
    if f_star is None:
        raise ValueError("grid search ranks runs by normalized objective and needs f_star")
    scores = {}
    for s in steps:
        sched = replace(schedule, step=float(s))
        try:
            tr = solver(problem, oracle, x0, sched, make_rng(seed), f_star=f_star, track_gmap=False)
            score = tr.final_normalized_objective
        except DivergenceError:
            score = np.inf
        scores[float(s)] = score if np.isfinite(score) else np.inf
    best = min(scores, key=lambda s: (scores[s], s))
    if not np.isfinite(scores[best]):
        raise DivergenceError(0, "every grid step diverged")
    return best, scores
