r"""Proximal operators.

Every operator maps ``(y, step)`` to

.. math:: \operatorname{prox}_{\gamma r}(y) = \arg\min_x \tfrac12\|x - y\|_2^2 + \gamma r(x)

and also exposes ``value(x)`` so objectives ``d + r`` can be evaluated.
Operator objects are immutable and safe to share between threads.
"""

import numpy as np

from ._numerics import check_step, check_vector

__all__ = [
    "ProxOperator",
    "ZeroProx",
    "L1Prox",
    "NonnegProx",
    "TV2DProx",
    "LinearProx",
    "LinearizedProx",
    "prox_l1",
    "prox_nonneg",
    "prox_tv2d",
    "prox_linear",
    "tv2d_value",
]


def prox_l1(y, threshold):
    """Elementwise soft threshold ``sign(y) * max(|y| - threshold, 0)``."""
    if threshold < 0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    y = np.asarray(y, dtype=np.float64)
    return np.sign(y) * np.maximum(np.abs(y) - threshold, 0.0)


def prox_nonneg(y):
    """Projection onto the nonnegative orthant."""
    return np.maximum(np.asarray(y, dtype=np.float64), 0.0)


def prox_linear(y, gradient, step):
    """Prox of ``x -> <g, x> + c``, which is the shift ``y - step * g``."""
    y = np.asarray(y, dtype=np.float64)
    g = np.asarray(gradient, dtype=np.float64)
    if y.shape != g.shape:
        raise ValueError(f"length mismatch: y has {y.shape}, gradient has {g.shape}")
    return y - step * g


def _diff(img):
    # forward differences, zero on the last column / row
    gh = np.zeros_like(img)
    gv = np.zeros_like(img)
    gh[:, :-1] = img[:, 1:] - img[:, :-1]
    gv[:-1, :] = img[1:, :] - img[:-1, :]
    return gh, gv


def _diff_adjoint(ph, pv):
    out = np.zeros_like(ph)
    out[:, :-1] -= ph[:, :-1]
    out[:, 1:] += ph[:, :-1]
    out[:-1, :] -= pv[:-1, :]
    out[1:, :] += pv[:-1, :]
    return out


def tv2d_value(x, shape):
    """Anisotropic total variation: sum of absolute neighbour differences."""
    gh, gv = _diff(np.asarray(x, dtype=np.float64).reshape(shape))
    return float(np.abs(gh).sum() + np.abs(gv).sum())


def prox_tv2d(y, shape, strength, max_inner=300, tol=1e-8):
    """Anisotropic TV prox by accelerated projected gradient on the dual.

    The dual variable lives on the horizontal and vertical differences and is
    boxed to ``[-strength, strength]``. The step is 1/8, the inverse of the
    bound on the squared norm of the 2-D difference operator. Iterations stop
    after ``max_inner`` steps or once the relative change of the dual
    variable drops below ``tol``.
    """
    y = np.asarray(y, dtype=np.float64)
    shape = tuple(int(s) for s in shape)
    if len(shape) != 2 or shape[0] * shape[1] != y.size:
        raise ValueError(f"image of length {y.size} does not match shape {shape}")
    if strength < 0:
        raise ValueError(f"strength must be nonnegative, got {strength}")
    if strength == 0 or y.size == 1:
        return y.copy()
    img = y.reshape(shape)
    qh = np.zeros(shape)
    qv = np.zeros(shape)
    rh, rv = qh, qv
    t = 1.0
    for _ in range(max_inner):
        gh, gv = _diff(img - _diff_adjoint(rh, rv))
        nh = np.clip(rh + gh / 8.0, -strength, strength)
        nv = np.clip(rv + gv / 8.0, -strength, strength)
        change = np.sqrt(np.sum((nh - qh) ** 2) + np.sum((nv - qv) ** 2))
        scale = np.sqrt(np.sum(nh**2) + np.sum(nv**2))
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        mom = (t - 1.0) / t_next
        rh = nh + mom * (nh - qh)
        rv = nv + mom * (nv - qv)
        qh, qv, t = nh, nv, t_next
        if scale > 0 and change <= tol * scale:
            break
    return (img - _diff_adjoint(qh, qv)).ravel()


class ProxOperator:
    """Base class: a closed proper convex regularizer with a computable prox."""

    name = "prox"

    def __call__(self, y, step):
        raise NotImplementedError

    def value(self, x):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


class ZeroProx(ProxOperator):
    """The zero function; its prox is the identity."""

    name = "zero"

    def __call__(self, y, step):
        return np.array(y, dtype=np.float64, copy=True)

    def value(self, x):
        return 0.0


class L1Prox(ProxOperator):
    """``weight * ||x||_1``."""

    name = "l1"

    def __init__(self, weight):
        if weight < 0:
            raise ValueError("weight must be nonnegative")
        self.weight = float(weight)

    def __call__(self, y, step):
        return prox_l1(y, step * self.weight)

    def value(self, x):
        return self.weight * float(np.abs(x).sum())

    def __repr__(self):
        return f"L1Prox(weight={self.weight!r})"


class NonnegProx(ProxOperator):
    """Indicator of the nonnegative orthant."""

    name = "nonneg"

    def __call__(self, y, step):
        return prox_nonneg(y)

    def value(self, x):
        return 0.0 if np.all(np.asarray(x) >= 0) else np.inf


class TV2DProx(ProxOperator):
    """``weight * TV(x)`` for ``x`` holding a row-major image of ``shape``."""

    name = "tv2d"

    def __init__(self, weight, shape, max_inner=300, tol=1e-8):
        if weight < 0:
            raise ValueError("weight must be nonnegative")
        self.weight = float(weight)
        self.shape = tuple(int(s) for s in shape)
        self.max_inner = int(max_inner)
        self.tol = float(tol)

    def __call__(self, y, step):
        return prox_tv2d(y, self.shape, step * self.weight, self.max_inner, self.tol)

    def value(self, x):
        return self.weight * tv2d_value(x, self.shape)

    def __repr__(self):
        return f"TV2DProx(weight={self.weight!r}, shape={self.shape})"


class LinearProx(ProxOperator):
    """``<gradient, x> + offset``. Exact prox, no tolerance."""

    name = "linear"

    def __init__(self, gradient, offset=0.0):
        self.gradient = check_vector(gradient, "gradient")
        self.offset = float(offset)

    def __call__(self, y, step):
        return prox_linear(y, self.gradient, step)

    def value(self, x):
        return self.offset + float(self.gradient @ x)


class LinearizedProx(ProxOperator):
    """First-order model of a smooth ``f_k`` taken at the point being proxed.

    With a zero smooth term the gradient step is the identity, so the prox
    input *is* the current iterate and the linearisation anchor coincides
    with it. ``grad`` maps a point to ``grad f_k`` at that point; ``func``
    (optional) gives ``f_k`` for objective evaluation.
    """

    name = "linearized"

    def __init__(self, grad, func=None):
        self.grad = grad
        self.func = func

    def __call__(self, y, step):
        y = np.asarray(y, dtype=np.float64)
        return prox_linear(y, self.grad(y), check_step(step))

    def value(self, x):
        # the model is exact at its own anchor
        if self.func is None:
            raise NotImplementedError("LinearizedProx needs func to report values")
        return float(self.func(x))
