"""Command-line entry point.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 solver
divergence (partial trace still written), 3 I/O failure.
"""

import argparse
import os
import sys

from .experiment import ConfigError, ConfigFileError, parse_config, run_comparison, run_experiment
from .problems import make_lasso_instance
from .theory import theorem1_check, theorem2_check

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="signprox", description="Stochastic and one-bit proximal-gradient experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one configured experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="trace CSV path (overrides 'output')")

    check = sub.add_parser("check", help="check a convergence bound on the LASSO fixture")
    check.add_argument("--theorem", type=int, choices=(1, 2), required=True)
    check.add_argument("--T", type=int, required=True)
    check.add_argument("--seeds", type=int, default=20)
    check.add_argument("--rng", type=int, default=0, help="seed for probes and runs")
    check.add_argument("--out", help="also append the report as a CSV row")

    cmp_ = sub.add_parser("compare", help="SPGM against signProx on one instance")
    cmp_.add_argument("--config", required=True)
    cmp_.add_argument("--seed", type=int)
    cmp_.add_argument("--out")
    return p


def _cmd_run(args):
    cfg = parse_config(args.config, seed=args.seed, output=args.out)
    art = run_experiment(cfg)
    print(art.summary, end="")
    if art.diverged_at is not None:
        print(f"diverged at iteration {art.diverged_at}; partial trace in {art.trace_path}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def _cmd_compare(args):
    cfg = parse_config(args.config, seed=args.seed, output=args.out)
    arts, text = run_comparison(cfg)
    print(text, end="")
    if any(a.diverged_at is not None for a in arts.values()):
        return EXIT_DIVERGED
    return EXIT_OK


def _cmd_check(args):
    if args.T < 1:
        raise ConfigError("must be >= 1", "T")
    if args.seeds < 10:
        raise ConfigError("must be >= 10", "seeds")
    if args.theorem == 2 and args.T > 512:
        raise ConfigError("B = T makes T > 512 impractical", "T")
    inst = make_lasso_instance(20, 40, 8, condition=10.0, rng=0)
    check = theorem1_check if args.theorem == 1 else theorem2_check
    try:
        rep = check(inst, args.T, seeds=args.seeds, rng=args.rng)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(rep.to_text(), end="")
    if args.out:
        fresh = not os.path.exists(args.out) or os.path.getsize(args.out) == 0
        with open(args.out, "a", encoding="utf-8") as fh:
            if fresh:
                fh.write(rep.csv_header() + "\n")
            fh.write(rep.to_csv_row() + "\n")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "check": _cmd_check, "compare": _cmd_compare}[args.command]
    try:
        return handler(args)
    except ConfigFileError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
