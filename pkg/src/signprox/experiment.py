"""Config-driven experiment runs.

A run is described by a flat ``key = value`` text file (``#`` starts a
comment). :func:`parse_config` validates every key before anything is
computed, :func:`run_experiment` builds the instance, resolves the step size
and writes the trace as CSV together with a plain-text summary.
"""

import csv
import math
import os
from dataclasses import dataclass, field, fields, replace
from typing import Optional, Union

import numpy as np

from ._numerics import make_rng
from .oracles import ExactOracle, MinibatchOracle, NoiseModel, NoisyOracle
from .problems import make_lasso_instance, make_phase_retrieval_instance
from .prox import L1Prox, TV2DProx, ZeroProx, _diff, _diff_adjoint
from .solvers import (
    DivergenceError,
    Schedule,
    Trace,
    grid_search_step,
    run_pgm_reference,
    run_signprox,
    run_signsgd,
    run_spgm,
)
from .theory import BoundReport, theorem1_check, theorem2_check

__all__ = [
    "ConfigError",
    "ConfigFileError",
    "ExperimentConfig",
    "RunArtifacts",
    "parse_config",
    "run_experiment",
    "run_comparison",
    "communication_cost",
    "write_trace_csv",
    "read_trace_csv",
    "reference_optimum",
]

PROBLEMS = ("phase_retrieval", "lasso")
ALGORITHMS = ("spgm", "signprox", "signsgd", "pgm_reference", "theorem1", "theorem2")
ENCODINGS = {"sign1bit": 1, "float64": 64}

# keys that only make sense for one problem kind
_PROBLEM_KEYS = {
    "phase_retrieval": {"side", "tv_weight", "tv_max_inner", "reference_step", "reference_iters"},
    "lasso": {"n", "K", "lambda", "condition", "check_seeds"},
}

# algorithm -> symbolic steps it accepts
_STEP_COMPAT = {
    "theorem1": ("spgm", "theorem1"),
    "theorem2": ("signprox", "signsgd", "theorem2"),
}


class ConfigError(ValueError):
    """Invalid or unreadable configuration; ``key`` names the culprit."""

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key


class ConfigFileError(ConfigError):
    """The config file could not be read."""


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str
    algorithm: str
    T: int
    seed: int
    # phase retrieval
    side: int = 50
    tv_weight: float = 1e-3
    tv_max_inner: int = 300
    reference_step: float = 0.3
    reference_iters: int = 3000
    # lasso
    n: int = 20
    K: int = 8
    lam: Optional[float] = None
    condition: float = 10.0
    check_seeds: int = 20
    # shared
    m: Optional[int] = None
    instance_seed: int = 0
    gamma: Union[float, str, None] = None
    B: Union[int, str, None] = None
    rho: float = 1.0
    sigma: Optional[float] = None
    x0: Optional[float] = None
    grid_seed: int = 1000
    output: str = "trace.csv"
    defaults_applied: tuple = field(default=(), compare=False)

    @property
    def resolved_m(self):
        if self.m is not None:
            return self.m
        return 3000 if self.problem == "phase_retrieval" else 40

    def items(self):
        """``(config_key, value)`` pairs in declaration order, minus the other problem's keys."""
        other = _PROBLEM_KEYS["lasso" if self.problem == "phase_retrieval" else "phase_retrieval"]
        out = []
        for f in fields(self):
            key = "lambda" if f.name == "lam" else f.name
            if f.name != "defaults_applied" and key not in other:
                out.append((key, self.resolved_m if key == "m" else getattr(self, f.name)))
        return out


# --- parsing -----------------------------------------------------------------


def _as_int(key, text, low=None):
    try:
        v = int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}", key) from None
    if low is not None and v < low:
        raise ConfigError(f"must be >= {low}, got {v}", key)
    return v


def _as_float(key, text, positive=False, nonneg=False):
    try:
        v = float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}", key) from None
    if not math.isfinite(v):
        raise ConfigError(f"must be finite, got {text!r}", key)
    if positive and v <= 0:
        raise ConfigError(f"must be > 0, got {v}", key)
    if nonneg and v < 0:
        raise ConfigError(f"must be >= 0, got {v}", key)
    return v


def _choice(options):
    def conv(key, text):
        if text not in options:
            raise ConfigError(f"must be one of {', '.join(options)}; got {text!r}", key)
        return text
    return conv


def _gamma(key, text):
    if text in ("theorem1", "theorem2", "grid"):
        return text
    return _as_float(key, text, positive=True)


def _batch(key, text):
    return "T" if text == "T" else _as_int(key, text, low=1)


def _rho(key, text):
    v = _as_float(key, text)
    if not 0.0 < v <= 1.0:
        raise ConfigError(f"must lie in (0, 1], got {v}", key)
    return v


_CONVERTERS = {
    "problem": _choice(PROBLEMS),
    "algorithm": _choice(ALGORITHMS),
    "T": lambda k, t: _as_int(k, t, low=1),
    "seed": lambda k, t: _as_int(k, t, low=0),
    "side": lambda k, t: _as_int(k, t, low=8),
    "tv_weight": lambda k, t: _as_float(k, t, nonneg=True),
    "tv_max_inner": lambda k, t: _as_int(k, t, low=1),
    "reference_step": lambda k, t: _as_float(k, t, positive=True),
    "reference_iters": lambda k, t: _as_int(k, t, low=1),
    "n": lambda k, t: _as_int(k, t, low=1),
    "K": lambda k, t: _as_int(k, t, low=1),
    "lambda": lambda k, t: _as_float(k, t, positive=True),
    "condition": lambda k, t: _as_float(k, t, positive=True),
    "check_seeds": lambda k, t: _as_int(k, t, low=10),
    "m": lambda k, t: _as_int(k, t, low=1),
    "instance_seed": lambda k, t: _as_int(k, t, low=0),
    "gamma": _gamma,
    "B": _batch,
    "rho": _rho,
    "sigma": lambda k, t: _as_float(k, t, nonneg=True),
    "x0": _as_float,
    "grid_seed": lambda k, t: _as_int(k, t, low=0),
    "output": lambda k, t: t,
}
_REQUIRED = ("problem", "algorithm", "T", "seed")


def _read_pairs(text, source="<string>"):
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: missing key")
        if key not in _CONVERTERS:
            raise ConfigError(f"{source}:{lineno}: unknown key", key)
        if key in pairs:
            raise ConfigError(f"{source}:{lineno}: duplicate key", key)
        if not value:
            raise ConfigError(f"{source}:{lineno}: missing value", key)
        pairs[key] = value
    return pairs


def config_from_mapping(pairs, overrides=None):
    """Validate raw ``{key: text}`` pairs (plus typed overrides) into a config."""
    values = {}
    for key, text in pairs.items():
        if key not in _CONVERTERS:
            raise ConfigError("unknown key", key)
        values[key] = _CONVERTERS[key](key, str(text).strip())
    for key, v in (overrides or {}).items():
        if v is not None:
            values[key] = _CONVERTERS[key](key, str(v))
    for key in _REQUIRED:
        if key not in values:
            raise ConfigError("required key missing", key)
    problem, algorithm = values["problem"], values["algorithm"]
    other = "lasso" if problem == "phase_retrieval" else "phase_retrieval"
    for key in values:
        if key in _PROBLEM_KEYS[other]:
            raise ConfigError(f"not a {problem} parameter", key)
    if algorithm in ("theorem1", "theorem2") and problem != "lasso":
        raise ConfigError(f"{algorithm} checks run on the lasso family only", "algorithm")
    if algorithm == "signsgd" and problem != "lasso":
        raise ConfigError("signsgd runs on the lasso family only", "algorithm")

    defaults = []

    def default(key, value):
        if key not in values:
            values[key] = value
            defaults.append(key)

    default("gamma", algorithm if algorithm in _STEP_COMPAT else "grid")
    gamma = values["gamma"]
    if gamma in _STEP_COMPAT and algorithm not in _STEP_COMPAT[gamma]:
        raise ConfigError(f"step rule {gamma!r} does not apply to algorithm {algorithm!r}", "gamma")
    if algorithm in _STEP_COMPAT and gamma != algorithm:
        raise ConfigError(f"{algorithm} requires gamma = {algorithm}", "gamma")
    default("B", "T" if gamma == "theorem2" else 1)
    if gamma == "theorem2" and values["B"] != "T" and values["B"] != values["T"]:
        raise ConfigError("the theorem2 step rule fixes B = T", "B")
    if algorithm == "theorem1" and values["B"] != 1:
        raise ConfigError("theorem1 requires B = 1", "B")
    if gamma == "grid" and algorithm in ("theorem1", "theorem2"):
        raise ConfigError("theorem checks use their own step rule", "gamma")
    default("sigma", 0.1 if problem == "phase_retrieval" else 0.0)
    default("x0", 0.5 if problem == "phase_retrieval" else 0.0)
    for f in fields(ExperimentConfig):
        key = "lambda" if f.name == "lam" else f.name
        if f.name == "defaults_applied" or key in _PROBLEM_KEYS[other]:
            continue
        if key not in values:
            defaults.append(key)
    kwargs = {("lam" if k == "lambda" else k): v for k, v in values.items()}
    return ExperimentConfig(**kwargs, defaults_applied=tuple(sorted(set(defaults))))


def parse_config(path, **overrides):
    """Read and validate a config file. ``overrides`` replace file values."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigFileError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return config_from_mapping(_read_pairs(text, str(path)), overrides)


# --- CSV ---------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_trace_csv(trace, path):
    """Write the trace columns with round-trip float precision."""
    cols = [trace.t, trace.f, trace.normalized_obj, trace.gmap_l2sq, trace.gmap_l1, trace.bits_cumulative]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(Trace.COLUMNS)
        for row in zip(*cols):
            w.writerow([_fmt(row[0])] + [repr(float(v)) for v in row[1:5]] + [_fmt(row[5])])


def read_trace_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != Trace.COLUMNS:
        raise ValueError(f"{path}: unexpected header {rows[0] if rows else None}")
    data = list(zip(*rows[1:])) if len(rows) > 1 else [()] * len(Trace.COLUMNS)
    return Trace(
        t=np.array([int(v) for v in data[0]], dtype=np.int64),
        f=np.array(data[1], dtype=np.float64),
        normalized_obj=np.array(data[2], dtype=np.float64),
        gmap_l2sq=np.array(data[3], dtype=np.float64),
        gmap_l1=np.array(data[4], dtype=np.float64),
        bits_cumulative=np.array([int(v) for v in data[5]], dtype=np.int64),
    )


def communication_cost(trace, encoding):
    """Total bits sent over the trace: ``n`` per iteration for signs, ``64 n`` for floats."""
    if encoding not in ENCODINGS:
        raise ValueError(f"encoding must be one of {tuple(ENCODINGS)}, got {encoding!r}")
    return int(trace.dim) * ENCODINGS[encoding] * int(trace.iterations)


# --- instances and f* --------------------------------------------------------

_FSTAR_CACHE = {}


def build_instance(cfg):
    if cfg.problem == "phase_retrieval":
        return make_phase_retrieval_instance(cfg.side, cfg.resolved_m, cfg.tv_weight, cfg.instance_seed)
    inst = make_lasso_instance(cfg.n, cfg.resolved_m, cfg.K, cfg.condition, cfg.instance_seed)
    if cfg.lam is not None:
        # rescale the drawn penalties so their weighted mean equals lambda
        lambdas = inst.lambdas * (cfg.lam / inst.mean_lambda)
        rebuilt = type(inst).from_arrays(inst.A, inst.b, lambdas, inst.weights)
        object.__setattr__(rebuilt, "lipschitz", inst.lipschitz)
        object.__setattr__(rebuilt, "coord_lipschitz", inst.coord_lipschitz)
        inst = rebuilt
    return inst


def build_problem(cfg, inst):
    if cfg.problem == "phase_retrieval":
        return inst.problem(max_inner=cfg.tv_max_inner)
    return inst.problem()


def _instance_key(cfg):
    keys = ("problem", "side", "tv_weight", "tv_max_inner", "reference_step", "reference_iters",
            "n", "K", "lam", "condition", "instance_seed", "x0")
    return tuple(getattr(cfg, k) for k in keys) + (cfg.resolved_m,)


def reference_optimum(cfg, inst=None, problem=None):
    """``f*`` for the configured instance, computed once per process.

    LASSO instances carry their optimum. For phase retrieval this runs the
    deterministic full-prox method from ``x0``.
    """
    key = _instance_key(cfg)
    if key not in _FSTAR_CACHE:
        inst = build_instance(cfg) if inst is None else inst
        if cfg.problem == "lasso":
            _FSTAR_CACHE[key] = (float(inst.f_star), True, 0)
        else:
            problem = build_problem(cfg, inst) if problem is None else problem
            ref = run_pgm_reference(problem, np.full(inst.n, cfg.x0), cfg.reference_step,
                                    max_iter=cfg.reference_iters, tol=1e-6)
            _FSTAR_CACHE[key] = (float(ref.f), bool(ref.converged), int(ref.iterations))
    return _FSTAR_CACHE[key]


# --- running -----------------------------------------------------------------


@dataclass
class RunArtifacts:
    trace_path: str
    summary_path: str
    summary: str
    trace: Trace
    report: Optional[BoundReport] = None
    report_path: Optional[str] = None
    diverged_at: Optional[int] = None


def _subgradient(op, x):
    if isinstance(op, ZeroProx):
        return np.zeros_like(x)
    if isinstance(op, L1Prox):
        return op.weight * np.sign(x)
    if isinstance(op, TV2DProx):
        return op.weight * _diff_adjoint(np.sign(_diff(x, op.shape)), op.shape)
    raise TypeError(f"no subgradient for {type(op).__name__}")


def _signsgd_solver(problem, oracle, x0, schedule, rng, f_star=None, track_gmap=True):
    # signSGD on f_k = d + r_k with (sub)gradients; sum_k w_k f_k is the problem objective
    grads = [(lambda x, op=op: problem.smooth_grad(x) + _subgradient(op, x)) for op in problem.components]
    funcs = [(lambda x, op=op: problem.smooth_value(x) + op.value(x)) for op in problem.components]
    return run_signsgd(grads, problem.weights, x0, schedule, rng, component_funcs=funcs,
                       f_star=f_star, track_gmap=track_gmap)


def _pgm_solver(problem, oracle, x0, schedule, rng, f_star=None, track_gmap=True):
    tr = run_spgm(problem, ExactOracle(problem), x0, schedule, rng, f_star=f_star, track_gmap=track_gmap)
    tr.algorithm = "pgm_reference"
    return tr


_SOLVERS = {
    "spgm": run_spgm,
    "theorem1": run_spgm,
    "signprox": run_signprox,
    "theorem2": run_signprox,
    "signsgd": _signsgd_solver,
    "pgm_reference": _pgm_solver,
}


def _oracle(cfg, problem):
    if cfg.sigma > 0:
        return NoisyOracle(problem, NoiseModel(cfg.rho, cfg.sigma))
    return MinibatchOracle(problem)


def _side_path(path, suffix):
    root, _ = os.path.splitext(path)
    return root + suffix


def _summary_lines(cfg, algorithm, sched, trace, f_star, ref_info, grid_scores, encoding):
    lines = ["# resolved parameters"]
    for key, value in cfg.items():
        if key in ("algorithm", "gamma", "B"):
            continue
        lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    lines.append(f"algorithm = {algorithm}")
    lines.append(f"gamma_rule = {cfg.gamma}")
    lines.append(f"gamma = {sched.step!r}")
    lines.append(f"B = {sched.batch}")
    if grid_scores:
        lines.append(f"grid_seed = {cfg.grid_seed}")
        lines.append("grid_scores = " + " ".join(f"{s!r}:{v!r}" for s, v in grid_scores.items()))
    lines.append(f"f_star = {f_star!r}")
    lines.append(f"f_star_converged = {ref_info[0]}")
    lines.append(f"defaults_applied = {' '.join(cfg.defaults_applied) or '(none)'}")
    lines.append("# results")
    lines.append(f"iterations = {trace.iterations}")
    lines.append(f"final_f = {float(trace.f[-1])!r}")
    lines.append(f"final_normalized_obj = {float(trace.normalized_obj[-1])!r}")
    lines.append(f"final_gmap_l2sq = {float(trace.gmap_l2sq[-1])!r}")
    lines.append(f"final_gmap_l1 = {float(trace.gmap_l1[-1])!r}")
    lines.append(f"encoding = {encoding}")
    lines.append(f"total_bits = {int(trace.bits_cumulative[-1])}")
    return lines


def _execute(cfg, algorithm, inst, problem, f_star, ref_info, output):
    oracle = _oracle(cfg, problem)
    solver = _SOLVERS[algorithm]
    x0 = np.full(problem.dim, cfg.x0)
    grid_scores = None
    if cfg.gamma == "grid":
        base = Schedule(1.0, cfg.B, cfg.T).resolve()
        step, grid_scores = grid_search_step(solver, problem, oracle, x0, base, cfg.grid_seed, f_star)
        sched = replace(base, step=step)
    else:
        sched = Schedule(cfg.gamma, cfg.B, cfg.T).resolve(problem.lipschitz, problem.coord_lipschitz)
    diverged_at = None
    try:
        trace = solver(problem, oracle, x0, sched, make_rng(cfg.seed), f_star=f_star)
    except DivergenceError as exc:
        trace, diverged_at = exc.trace, exc.iteration
    encoding = "float64" if algorithm in ("spgm", "theorem1", "pgm_reference") else "sign1bit"
    trace_path = output
    write_trace_csv(trace, trace_path)
    lines = _summary_lines(cfg, algorithm, sched, trace, f_star, ref_info, grid_scores, encoding)
    if diverged_at is not None:
        lines.append(f"diverged_at = {diverged_at}")
    report = report_path = None
    if algorithm in ("theorem1", "theorem2"):
        check = theorem1_check if algorithm == "theorem1" else theorem2_check
        report = check(inst, cfg.T, seeds=cfg.check_seeds, rng=cfg.seed, x0=x0)
        report_path = _side_path(output, ".report.txt")
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(report.to_text())
        lines.append(f"bound_passed = {report.passed}")
    summary = "\n".join(lines) + "\n"
    summary_path = _side_path(output, ".summary.txt")
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(summary)
    return RunArtifacts(trace_path, summary_path, summary, trace, report, report_path, diverged_at)


def _prepare(cfg):
    inst = build_instance(cfg)
    problem = build_problem(cfg, inst)
    f_star, converged, iters = reference_optimum(cfg, inst, problem)
    return inst, problem, f_star, (converged, iters)


def run_experiment(cfg):
    """Run one configured experiment and write its artifacts.

    Divergence does not raise: the partial trace is written and
    ``RunArtifacts.diverged_at`` holds the failing iteration.
    """
    inst, problem, f_star, ref_info = _prepare(cfg)
    return _execute(cfg, cfg.algorithm, inst, problem, f_star, ref_info, cfg.output)


def run_comparison(cfg):
    """SPGM and signProx on the same instance, noise and seed.

    Each algorithm gets its own tuned step when ``gamma = grid``. Returns the
    two artifacts and an ordering summary line.
    """
    inst, problem, f_star, ref_info = _prepare(cfg)
    out = {}
    for algorithm in ("spgm", "signprox"):
        sub = replace(cfg, algorithm=algorithm)
        out[algorithm] = _execute(sub, algorithm, inst, problem, f_star, ref_info,
                                  _side_path(cfg.output, f"_{algorithm}.csv"))
    a = out["spgm"].trace.final_normalized_objective
    b = out["signprox"].trace.final_normalized_objective
    winner = "spgm" if a < b else "signprox" if b < a else "tie"
    text = f"rho = {cfg.rho!r}\nspgm_final = {a!r}\nsignprox_final = {b!r}\nlower = {winner}\n"
    with open(_side_path(cfg.output, "_compare.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    return out, text
