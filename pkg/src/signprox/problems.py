"""Concrete problem instances: TV-regularized phase retrieval and LASSO families.

Instances are immutable once built and can be written to / read from a plain
text format (see :func:`save_instance`).
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._numerics import check_vector, check_weights, gaussian_matrix, make_rng
from .oracles import Problem
from .prox import L1Prox, TV2DProx

__all__ = [
    "SHEPP_LOGAN_ELLIPSES",
    "shepp_logan",
    "PhaseRetrievalInstance",
    "make_phase_retrieval_instance",
    "phase_retrieval_value",
    "phase_retrieval_grad",
    "LassoInstance",
    "make_lasso_instance",
    "save_instance",
    "load_instance",
]

# (intensity, semi-axis x, semi-axis y, centre x, centre y, rotation in degrees)
# Toft's high-contrast variant of the Shepp-Logan table; y points up.
SHEPP_LOGAN_ELLIPSES = (
    (1.0, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.8, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.2, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.2, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.1, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.1, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.1, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.1, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.1, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    (0.1, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)


def shepp_logan(side):
    """Rasterize the 10-ellipse phantom on a ``side x side`` grid.

    A pixel belongs to an ellipse when its centre does. Intensities add up and
    are clipped to ``[0, 1]``. Returns the image flattened row-major, row 0 at
    the top.
    """
    side = int(side)
    if side < 8:
        raise ValueError(f"side must be >= 8, got {side}")
    centres = -1.0 + (2.0 * np.arange(side) + 1.0) / side
    X, Y = np.meshgrid(centres, centres[::-1])
    img = np.zeros((side, side))
    for amp, a, b, x0, y0, deg in SHEPP_LOGAN_ELLIPSES:
        phi = np.deg2rad(deg)
        c, s = np.cos(phi), np.sin(phi)
        u = (X - x0) * c + (Y - y0) * s
        v = -(X - x0) * s + (Y - y0) * c
        img[(u / a) ** 2 + (v / b) ** 2 <= 1.0] += amp
    return np.clip(img, 0.0, 1.0).ravel()


@dataclass(frozen=True, eq=False)
class PhaseRetrievalInstance:
    """Real generalized phase retrieval ``y = (H x)^2`` with a TV penalty."""

    H: np.ndarray
    y: np.ndarray
    true_signal: np.ndarray
    tv_weight: float
    shape: tuple

    def __post_init__(self):
        m, n = self.H.shape
        if self.y.shape != (m,) or self.true_signal.shape != (n,):
            raise ValueError("H, y and true_signal have inconsistent sizes")
        if self.shape[0] * self.shape[1] != n:
            raise ValueError(f"image shape {self.shape} does not hold {n} pixels")
        if self.tv_weight < 0:
            raise ValueError("tv_weight must be nonnegative")

    @property
    def n(self):
        return self.H.shape[1]

    @property
    def m(self):
        return self.H.shape[0]

    def problem(self, tv_weight=None, max_inner=300, tol=1e-8):
        lam = self.tv_weight if tv_weight is None else tv_weight
        return Problem(
            smooth_value=lambda x: phase_retrieval_value(self, x),
            smooth_grad=lambda x: phase_retrieval_grad(self, x),
            components=(TV2DProx(lam, self.shape, max_inner, tol),),
            weights=np.ones(1),
            dim=self.n,
            name="phase_retrieval",
        )

    def with_tv_weight(self, tv_weight):
        return PhaseRetrievalInstance(self.H, self.y, self.true_signal, float(tv_weight), self.shape)


def phase_retrieval_value(inst, x):
    """``0.5 * ||y - (H x)^2||^2``."""
    x = check_vector(x, "x", inst.n)
    r = inst.y - (inst.H @ x) ** 2
    return 0.5 * float(r @ r)


def phase_retrieval_grad(inst, x):
    """``2 H^T (((H x)^2 - y) * H x)``."""
    x = check_vector(x, "x", inst.n)
    z = inst.H @ x
    return 2.0 * (inst.H.T @ ((z * z - inst.y) * z))


def make_phase_retrieval_instance(side, m, tv_weight, rng):
    """Shepp-Logan phantom seen through ``m`` Gaussian intensity measurements.

    ``H`` has i.i.d. ``N(0, 1/m)`` entries.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rng = make_rng(rng)
    x = shepp_logan(side)
    H = gaussian_matrix(m, x.size, 1.0 / m, rng)
    y = (H @ x) ** 2
    return PhaseRetrievalInstance(H, y, x, float(tv_weight), (side, side))


@dataclass(frozen=True, eq=False)
class LassoInstance:
    """``0.5 ||A x - b||^2`` with a family of l1 components ``lambdas[k] ||x||_1``.

    ``lipschitz`` is the largest eigenvalue of ``A^T A``. ``coord_lipschitz``
    holds per-coordinate curvatures, which are exact when ``A`` has orthogonal
    columns (the generator below guarantees this). ``f_star``/``x_star`` refer to
    the nominal objective ``0.5 ||A x - b||^2 + sum_k weights[k] lambdas[k] ||x||_1``.
    """

    A: np.ndarray
    b: np.ndarray
    lambdas: np.ndarray
    weights: np.ndarray
    lipschitz: float
    coord_lipschitz: np.ndarray
    f_star: float
    x_star: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def K(self):
        return self.lambdas.size

    @property
    def mean_lambda(self):
        return float(self.weights @ self.lambdas)

    def smooth_value(self, x):
        r = self.A @ x - self.b
        return 0.5 * float(r @ r)

    def smooth_grad(self, x):
        return self.A.T @ (self.A @ x - self.b)

    def value(self, x):
        return self.smooth_value(x) + self.mean_lambda * float(np.abs(x).sum())

    def problem(self):
        """The K-component problem used by the stochastic solvers."""
        return Problem(
            smooth_value=self.smooth_value,
            smooth_grad=self.smooth_grad,
            components=tuple(L1Prox(lam) for lam in self.lambdas),
            weights=self.weights,
            dim=self.n,
            lipschitz=self.lipschitz,
            coord_lipschitz=self.coord_lipschitz,
            name="lasso",
            objective=self.value,
        )

    def merged_problem(self):
        """Single-component problem with the mean penalty; shares the nominal objective."""
        return Problem(
            smooth_value=self.smooth_value,
            smooth_grad=self.smooth_grad,
            components=(L1Prox(self.mean_lambda),),
            weights=np.ones(1),
            dim=self.n,
            lipschitz=self.lipschitz,
            coord_lipschitz=self.coord_lipschitz,
            name="lasso_merged",
        )

    @classmethod
    def from_arrays(cls, A, b, lambdas, weights=None, tol=1e-10, max_iter=200000):
        """Build an instance and compute its reference optimum by ISTA."""
        from .solvers import run_pgm_reference

        A = np.atleast_2d(np.asarray(A, dtype=np.float64))
        b = check_vector(b, "b", A.shape[0])
        lambdas = np.atleast_1d(np.asarray(lambdas, dtype=np.float64))
        if np.any(lambdas <= 0):
            raise ValueError("lambdas must be positive")
        weights = check_weights(np.full(lambdas.size, 1.0 / lambdas.size) if weights is None else weights)
        gram = A.T @ A
        L = float(np.linalg.eigvalsh(gram)[-1])
        if L <= 0:
            raise ValueError("A^T A must have a positive largest eigenvalue")
        offdiag = gram - np.diag(np.diag(gram))
        if np.allclose(offdiag, 0.0, atol=1e-12 * L):
            coord = np.diag(gram).copy()
        else:
            # diagonal dominance bound: diag(coord) >= A^T A
            coord = np.abs(gram).sum(axis=1)
        inst = cls(A, b, lambdas, weights, L, coord, np.nan, np.zeros(A.shape[1]))
        ref = run_pgm_reference(inst.merged_problem(), np.zeros(A.shape[1]), 1.0 / L, max_iter, tol)
        object.__setattr__(inst, "f_star", float(ref.f))
        object.__setattr__(inst, "x_star", ref.x)
        inst.meta.update(reference_converged=ref.converged, reference_iterations=ref.iterations)
        return inst


def make_lasso_instance(n, m, K, condition=10.0, rng=None, lipschitz=1.0):
    """LASSO instance with a known spectrum.

    ``A = U diag(s)`` where ``U`` has orthonormal columns, so ``A^T A`` is
    diagonal with entries log-spaced between ``lipschitz / condition`` and
    ``lipschitz`` (columns beyond ``m`` are zero). The K penalties are distinct
    and the weights are drawn from a flat Dirichlet.
    """
    if min(n, m, K) < 1:
        raise ValueError("n, m and K must be >= 1")
    if condition < 1:
        raise ValueError("condition must be >= 1")
    rng = make_rng(rng)
    r = min(n, m)
    U, _ = np.linalg.qr(rng.standard_normal((m, r)))
    curv = np.zeros(n)
    curv[:r] = lipschitz * np.logspace(0.0, -np.log10(condition), r)
    perm = rng.permutation(n)
    curv = curv[perm]
    A = np.zeros((m, n))
    cols = np.flatnonzero(curv > 0)
    A[:, cols] = U[:, : cols.size] * np.sqrt(curv[cols])
    x_true = np.zeros(n)
    support = rng.choice(n, size=max(1, n // 4), replace=False)
    x_true[support] = rng.standard_normal(support.size)
    b = A @ x_true + 0.05 * rng.standard_normal(m)
    lambdas = np.sort(rng.uniform(0.02, 0.2, size=K))
    weights = rng.dirichlet(np.ones(K))
    weights /= weights.sum()
    inst = LassoInstance.from_arrays(A, b, lambdas, weights)
    # the constructed spectrum is known exactly; keep it rather than the eigensolver's
    object.__setattr__(inst, "lipschitz", float(curv.max()))
    object.__setattr__(inst, "coord_lipschitz", curv)
    return inst


# --- text serialization ------------------------------------------------------

def _write_array(fh, name, arr):
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 1:
        fh.write(f"{name} {arr.size}\n")
        fh.write(" ".join(repr(float(v)) for v in arr) + "\n")
    else:
        fh.write(f"{name} {arr.shape[0]} {arr.shape[1]}\n")
        for row in arr:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def save_instance(inst, path):
    """Write an instance as text.

    The first line is ``kind <phase_retrieval|lasso>``, followed by
    ``key value`` scalars and arrays given as a header ``name dim [dim]`` and
    then one line of space-separated numbers per row.
    """
    with open(path, "w", encoding="ascii") as fh:
        if isinstance(inst, PhaseRetrievalInstance):
            fh.write("kind phase_retrieval\n")
            fh.write(f"tv_weight {inst.tv_weight!r}\n")
            fh.write(f"shape {inst.shape[0]} {inst.shape[1]}\n")
            _write_array(fh, "H", inst.H)
            _write_array(fh, "y", inst.y)
            _write_array(fh, "true_signal", inst.true_signal)
        elif isinstance(inst, LassoInstance):
            fh.write("kind lasso\n")
            fh.write(f"lipschitz {inst.lipschitz!r}\n")
            fh.write(f"f_star {inst.f_star!r}\n")
            _write_array(fh, "A", inst.A)
            _write_array(fh, "b", inst.b)
            _write_array(fh, "lambdas", inst.lambdas)
            _write_array(fh, "weights", inst.weights)
            _write_array(fh, "coord_lipschitz", inst.coord_lipschitz)
            _write_array(fh, "x_star", inst.x_star)
        else:
            raise TypeError(f"cannot serialize {type(inst).__name__}")


def load_instance(path):
    with open(path, encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    pos = 0
    fields = {}
    while pos < len(lines):
        parts = lines[pos].split()
        pos += 1
        if not parts:
            continue
        key, rest = parts[0], parts[1:]
        if key in ("kind",):
            fields[key] = rest[0]
        elif key == "shape":
            fields[key] = (int(rest[0]), int(rest[1]))
        elif key in ("tv_weight", "lipschitz", "f_star"):
            fields[key] = float(rest[0])
        elif len(rest) == 1:
            fields[key] = np.array(lines[pos].split(), dtype=np.float64)
            if fields[key].size != int(rest[0]):
                raise ValueError(f"array {key!r}: expected {rest[0]} values")
            pos += 1
        elif len(rest) == 2:
            rows, cols = int(rest[0]), int(rest[1])
            data = np.array([ln.split() for ln in lines[pos:pos + rows]], dtype=np.float64)
            if data.shape != (rows, cols):
                raise ValueError(f"matrix {key!r}: expected {rows}x{cols}")
            fields[key] = data
            pos += rows
        else:
            raise ValueError(f"unparseable line {pos}: {lines[pos - 1]!r}")
    kind = fields.get("kind")
    if kind == "phase_retrieval":
        return PhaseRetrievalInstance(
            fields["H"], fields["y"], fields["true_signal"], fields["tv_weight"], fields["shape"]
        )
    if kind == "lasso":
        return LassoInstance(
            fields["A"], fields["b"], fields["lambdas"], fields["weights"],
            fields["lipschitz"], fields["coord_lipschitz"], fields["f_star"], fields["x_star"],
        )
    raise ValueError(f"unknown instance kind {kind!r}")
