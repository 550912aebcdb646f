"""Empirical checks of the SPGM and signProx convergence bounds.

Constants entering the bounds are either read off the problem (exact) or
measured:

* smoothness: scalar Lipschitz constant of ``grad d`` and a per-coordinate
  curvature vector,
* stochasticity: ``E ||P_k(x) - P(x)||^2 / step^2`` maximised over probe
  points, in total and per coordinate.

The bounds hold in expectation, so a check passes when the seed-averaged
left-hand side is at most ``slack`` times the right-hand side.
"""

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._numerics import check_vector, make_rng, sample_categorical
from .oracles import MinibatchOracle, prox_grad_component, prox_grad_full
from .solvers import Schedule, run_signprox, run_spgm

__all__ = [
    "SmoothnessProfile",
    "VarianceProfile",
    "BoundReport",
    "estimate_smoothness",
    "estimate_variance",
    "theorem1_rhs",
    "theorem2_rhs",
    "theorem1_check",
    "theorem2_check",
]

DEFAULT_SLACK = 1.1
_INFLATION = 1.5


@dataclass(frozen=True)
class SmoothnessProfile:
    scalar_L: float
    coord_L: np.ndarray
    source: str  # "exact" or "estimated"

    @property
    def coord_L_l1(self):
        return float(np.sum(self.coord_L))


@dataclass(frozen=True)
class VarianceProfile:
    scalar_sigma2: float
    coord_sigma: np.ndarray
    step: float

    @property
    def coord_sigma_l1(self):
        return float(np.sum(self.coord_sigma))

    @property
    def coord_sigma_l2sq(self):
        return float(self.coord_sigma @ self.coord_sigma)


def estimate_smoothness(problem, probes=100, rng=None, center=None, radius=1.0, rel_h=1e-3):
    """Lipschitz constants of ``grad d``.

    Exact when the problem carries them. Otherwise random probe points around
    ``center`` are each paired with a Rademacher perturbation of size
    ``rel_h * radius`` per coordinate. The scalar estimate is the largest
    ``||dg|| / ||dx||`` and coordinate ``i`` gets the largest ``|dg_i| / |dx_i|``.
    Both maxima are inflated by 1.5.
    """
    if problem.lipschitz is not None and problem.coord_lipschitz is not None:
        return SmoothnessProfile(float(problem.lipschitz), problem.coord_lipschitz.copy(), "exact")
    if probes < 100:
        raise ValueError("probes must be >= 100")
    rng = make_rng(rng)
    n = problem.dim
    c = np.zeros(n) if center is None else check_vector(center, "center", n)
    h = rel_h * radius
    best = 0.0
    coord = np.zeros(n)
    for _ in range(probes):
        x = c + radius * rng.standard_normal(n)
        dx = h * rng.choice((-1.0, 1.0), size=n)
        dg = problem.smooth_grad(x + dx) - problem.smooth_grad(x)
        best = max(best, float(np.linalg.norm(dg) / np.linalg.norm(dx)))
        coord = np.maximum(coord, np.abs(dg) / h)
    scalar = _INFLATION * best
    if problem.lipschitz is not None:
        scalar = float(problem.lipschitz)
    return SmoothnessProfile(scalar, _INFLATION * coord, "estimated")


def estimate_variance(problem, step, probe_points=10, samples_per_point=1000, rng=None,
                      oracle=None, points=None, radius=1.0):
    """Stochasticity constants at ``step``.

    Without ``oracle`` the deviation is ``P_k(x) - P(x)`` with ``k`` drawn
    from the problem weights; with an oracle it is ``estimate(x) - P(x)``
    (batch 1). Probe points are ``points`` if given, else Gaussian draws of
    scale ``radius``.
    """
    if samples_per_point < 1000:
        raise ValueError("samples_per_point must be >= 1000")
    rng = make_rng(rng)
    n = problem.dim
    if points is None:
        points = [radius * rng.standard_normal(n) for _ in range(probe_points)]
    total = 0.0
    per_coord = np.zeros(n)
    for x in points:
        x = check_vector(x, "probe point", n)
        p = prox_grad_full(problem, x, step)
        if oracle is None:
            comps = np.array([
                prox_grad_component(problem, k, x, step) if w > 0 else np.zeros(n)
                for k, w in enumerate(problem.weights)
            ])
            idx = sample_categorical(problem.weights, samples_per_point, rng)
            dev = comps[idx] - p
        else:
            dev = np.array([oracle.estimate(x, step, 1, rng) - p for _ in range(samples_per_point)])
        sq = dev * dev
        total = max(total, float(sq.sum(axis=1).mean()))
        per_coord = np.maximum(per_coord, sq.mean(axis=0))
    g2 = step * step
    return VarianceProfile(total / g2, np.sqrt(per_coord / g2), float(step))


def theorem1_rhs(L, gap, sigma2, T):
    return (2.0 * L * gap + 3.0 * sigma2) / math.sqrt(T)


def theorem2_rhs(L_l1, gap, sigma_l1, T):
    return 4.0 * (L_l1 * gap + sigma_l1 + 1.0) / math.sqrt(T)


@dataclass
class BoundReport:
    """Measured left-hand side against a theorem's right-hand side."""

    theorem: int
    lhs: float
    rhs: float
    T: int
    seeds: int
    step: float
    batch: int
    gap: float
    constants: dict
    lhs_stderr: float = 0.0
    slack: float = DEFAULT_SLACK
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.lhs <= self.slack * self.rhs)

    def recompute_rhs(self):
        c = self.constants
        if self.theorem == 1:
            return theorem1_rhs(c["L"], self.gap, c["sigma2"], self.T)
        return theorem2_rhs(c["L_l1"], self.gap, c["sigma_l1"], self.T)

    def _flat(self):
        d = asdict(self)
        consts = d.pop("constants")
        d.update(consts)
        return d

    def to_text(self):
        """``key = value`` lines, floats in round-trip precision."""
        lines = []
        for k, v in self._flat().items():
            lines.append(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}")
        return "\n".join(lines) + "\n"

    def csv_header(self):
        return ",".join(self._flat().keys())

    def to_csv_row(self):
        buf = io.StringIO()
        csv.writer(buf, lineterminator="").writerow(
            repr(v) if isinstance(v, float) else v for v in self._flat().values()
        )
        return buf.getvalue()


def _child_rngs(rng, count):
    return make_rng(rng).spawn(count)


def _variance_points(instance, x0, rng, extra=8):
    pts = [np.asarray(x0, dtype=np.float64), instance.x_star]
    pts += [rng.standard_normal(instance.n) for _ in range(extra)]
    return pts


def theorem1_check(instance, T, seeds=20, rng=None, x0=None, slack=DEFAULT_SLACK,
                   samples_per_point=1000):
    """SPGM with ``step = 1/(L sqrt T)`` and ``B = 1`` on a LASSO instance.

    LHS is the seed average of ``mean_{t<T} ||G(x^t)||_2^2``. RHS uses the
    exact ``L``, the stored optimum and the measured ``sigma^2``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if seeds < 10:
        raise ValueError("seeds must be >= 10")
    rng = make_rng(rng)
    problem = instance.problem()
    x0 = np.zeros(instance.n) if x0 is None else check_vector(x0, "x0", instance.n)
    smooth = estimate_smoothness(problem)
    sched = Schedule("theorem1", 1, T).resolve(lipschitz=smooth.scalar_L)
    var = estimate_variance(
        problem, sched.step, samples_per_point=samples_per_point, rng=rng,
        points=_variance_points(instance, x0, rng),
    )
    oracle = MinibatchOracle(problem)
    per_seed = []
    for child in _child_rngs(rng, seeds):
        tr = run_spgm(problem, oracle, x0, sched, child)
        per_seed.append(float(np.mean(tr.gmap_l2sq[:T])))
    per_seed = np.array(per_seed)
    gap = problem.value(x0) - instance.f_star
    return BoundReport(
        theorem=1,
        lhs=float(per_seed.mean()),
        rhs=theorem1_rhs(smooth.scalar_L, gap, var.scalar_sigma2, T),
        T=int(T),
        seeds=int(seeds),
        step=sched.step,
        batch=sched.batch,
        gap=float(gap),
        constants={"L": smooth.scalar_L, "sigma2": var.scalar_sigma2, "source": smooth.source},
        lhs_stderr=float(per_seed.std(ddof=1) / math.sqrt(seeds)),
        slack=slack,
    )


def theorem2_check(instance, T, seeds=20, rng=None, x0=None, slack=DEFAULT_SLACK,
                   samples_per_point=1000):
    """signProx with ``step = 1/(2 ||L||_1 sqrt T)`` and ``B = T`` on a LASSO instance.

    LHS is the seed average of ``mean_{t<T} ||G(x^t)||_1``. RHS uses the
    coordinate curvatures, the stored optimum and the measured coordinate
    stochasticity.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if T > 512:
        raise ValueError("T must be <= 512 (batch = T makes the cost quadratic)")
    if seeds < 10:
        raise ValueError("seeds must be >= 10")
    rng = make_rng(rng)
    problem = instance.problem()
    x0 = np.zeros(instance.n) if x0 is None else check_vector(x0, "x0", instance.n)
    smooth = estimate_smoothness(problem)
    sched = Schedule("theorem2", "T", T).resolve(coord_lipschitz=smooth.coord_L)
    var = estimate_variance(
        problem, sched.step, samples_per_point=samples_per_point, rng=rng,
        points=_variance_points(instance, x0, rng),
    )
    oracle = MinibatchOracle(problem)
    per_seed = []
    for child in _child_rngs(rng, seeds):
        tr = run_signprox(problem, oracle, x0, sched, child)
        per_seed.append(float(np.mean(tr.gmap_l1[:T])))
    per_seed = np.array(per_seed)
    gap = problem.value(x0) - instance.f_star
    return BoundReport(
        theorem=2,
        lhs=float(per_seed.mean()),
        rhs=theorem2_rhs(smooth.coord_L_l1, gap, var.coord_sigma_l1, T),
        T=int(T),
        seeds=int(seeds),
        step=sched.step,
        batch=sched.batch,
        gap=float(gap),
        constants={"L_l1": smooth.coord_L_l1, "sigma_l1": var.coord_sigma_l1, "source": smooth.source},
        lhs_stderr=float(per_seed.std(ddof=1) / math.sqrt(seeds)),
        slack=slack,
    )
