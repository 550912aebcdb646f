import numpy as np
import pytest

from signprox.oracles import Problem
from signprox.problems import make_lasso_instance
from signprox.prox import L1Prox, LinearProx, ZeroProx


def quadratic_problem(dim, components=None, weights=None, center=None):
    """``d(x) = 0.5 ||x - center||^2`` with the given regularizers."""
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    components = components or [ZeroProx()]
    weights = np.full(len(components), 1.0 / len(components)) if weights is None else weights
    return Problem(
        smooth_value=lambda x: 0.5 * float((x - c) @ (x - c)),
        smooth_grad=lambda x: x - c,
        components=components,
        weights=weights,
        dim=dim,
        lipschitz=1.0,
        coord_lipschitz=np.ones(dim),
    )


def zero_smooth_problem(dim, components, weights=None):
    weights = np.full(len(components), 1.0 / len(components)) if weights is None else weights
    return Problem(
        smooth_value=lambda x: 0.0,
        smooth_grad=lambda x: np.zeros(dim),
        components=components,
        weights=weights,
        dim=dim,
    )


@pytest.fixture(scope="session")
def lasso_fixture():
    """The standard theorem-check fixture: n = 20, m = 40, K = 8."""
    return make_lasso_instance(20, 40, 8, condition=10.0, rng=0)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
