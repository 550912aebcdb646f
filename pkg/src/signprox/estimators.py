"""scikit-learn style front end for l1-regularized least squares."""

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .oracles import MinibatchOracle, NoiseModel, NoisyOracle, Problem
from .prox import L1Prox
from .solvers import Schedule, run_signprox, run_spgm


class ProxGradLasso(RegressorMixin, BaseEstimator):
    """Lasso fitted by SPGM or signProx.

    Minimizes ``1/(2 n) ||X w + b - y||^2 + alpha ||w||_1``. With ``sigma > 0``
    each prox-gradient estimate is perturbed by the Bernoulli-Gaussian oracle
    noise, which is how the one-bit and full-precision updates are compared on
    real data.

    Parameters
    ----------
    alpha : float
        l1 strength.
    solver : {"spgm", "signprox"}
    step : float or None
        ``None`` picks ``1/L`` for SPGM and ``1/(L sqrt(max_iter))`` for
        signProx, with ``L`` the smoothness constant of the data term. A
        constant sign step leaves the iterate within about ``step`` of the
        solution in every coordinate.
    max_iter : int
    rho, sigma : float
        Oracle noise: spike probability and relative scale. ``sigma = 0`` turns
        the noise off.
    fit_intercept : bool
    random_state : int, Generator or None
    """

    def __init__(self, alpha=1.0, solver="signprox", step=None, max_iter=500, rho=1.0,
                 sigma=0.0, fit_intercept=True, random_state=None):
        self.alpha = alpha
        self.solver = solver
        self.step = step
        self.max_iter = max_iter
        self.rho = rho
        self.sigma = sigma
        self.fit_intercept = fit_intercept
        self.random_state = random_state

    def _validate_params(self):
        if self.solver not in ("spgm", "signprox"):
            raise ValueError(f"solver must be 'spgm' or 'signprox', got {self.solver!r}")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if self.step is not None and not (math.isfinite(self.step) and self.step > 0):
            raise ValueError("step must be positive")

    def fit(self, X, y):
        self._validate_params()
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        n_samples, n_features = X.shape
        if self.fit_intercept:
            x_mean, y_mean = X.mean(axis=0), y.mean()
            Xc, yc = X - x_mean, y - y_mean
        else:
            x_mean, y_mean = np.zeros(n_features), 0.0
            Xc, yc = X, y
        gram = Xc.T @ Xc / n_samples
        L = max(float(np.linalg.eigvalsh(gram)[-1]), 1e-12)
        # diagonal dominance bound on the coordinate smoothness constants
        coord = np.maximum(np.abs(gram).sum(axis=1), 1e-12)

        def value(w):
            r = Xc @ w - yc
            return 0.5 * float(r @ r) / n_samples

        def grad(w):
            return Xc.T @ (Xc @ w - yc) / n_samples

        problem = Problem(value, grad, (L1Prox(self.alpha),), np.ones(1), n_features,
                          lipschitz=L, coord_lipschitz=coord, name="lasso_estimator")
        if self.sigma > 0:
            oracle = NoisyOracle(problem, NoiseModel(self.rho, self.sigma))
        else:
            oracle = MinibatchOracle(problem)
        T = int(self.max_iter)
        if self.step is not None:
            step = float(self.step)
        elif self.solver == "spgm":
            step = 1.0 / L
        else:
            step = 1.0 / (L * math.sqrt(T))
        run = run_spgm if self.solver == "spgm" else run_signprox
        trace = run(problem, oracle, np.zeros(n_features), Schedule(step, 1, T),
                    self.random_state, track_gmap=False)
        self.coef_ = trace.x
        self.intercept_ = float(y_mean - x_mean @ self.coef_) if self.fit_intercept else 0.0
        self.step_ = step
        self.n_iter_ = trace.iterations
        self.objective_curve_ = trace.f
        self.n_features_in_ = n_features
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.coef_ + self.intercept_
