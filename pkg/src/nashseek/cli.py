"""Command-line entry point.

Exit codes: 0 success, 2 configuration or input error, 3 numerical abort,
4 equilibrium infeasibility.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import harness
from .config import ConfigError, ExperimentConfig, load_config
from .seeker import NumericalAbort
from .wireless import EquilibriumError, NonpositiveTargetError

EXIT_OK, EXIT_INPUT, EXIT_ABORT, EXIT_EQUILIBRIUM = 0, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment file (INI or .json)")
    common.add_argument("--seed", type=int, metavar="N")
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--lambda", dest="lam", type=float, metavar="X")
    common.add_argument("--horizon", type=int, metavar="N")

    p = argparse.ArgumentParser(prog="nashseek", description="Sinus-perturbation Nash seeking experiments")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run the learner and write trajectory.csv")
    sub.add_parser("compare", parents=[common], help="gap between iterates and the mean ODE")
    sub.add_parser("equilibrium", parents=[common], help="analytic power-control equilibrium")
    an = sub.add_parser("analyze", parents=[common], help="bounds and diagnostics for a trajectory")
    an.add_argument("--trajectory", required=True, metavar="PATH")
    pl = sub.add_parser("plot", parents=[common], help="action and payoff images from a trajectory")
    pl.add_argument("--trajectory", required=True, metavar="PATH")
    return p


def apply_overrides(cfg: ExperimentConfig, seed=None, out=None, lam=None, horizon=None) -> ExperimentConfig:
    """Flags win over file values."""
    seeker = cfg.seeker
    if lam is not None:
        seeker = dataclasses.replace(seeker, lambda0=lam)
    if horizon is not None:
        seeker = dataclasses.replace(seeker, horizon=horizon)
    cfg = dataclasses.replace(cfg, seeker=seeker)
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    if out is not None:
        cfg = dataclasses.replace(cfg, out_dir=out)
    cfg.validate()
    return cfg


def _load(args) -> ExperimentConfig:
    if args.config is None:
        raise ConfigError("--config is required", "config")
    cfg = load_config(args.config)
    return apply_overrides(cfg, args.seed, args.out, args.lam, args.horizon)


def _dispatch(args) -> int:
    if args.command == "plot":
        a_star, out = None, args.out or "."
        if args.config is not None:
            cfg = _load(args)
            out = args.out or cfg.out_dir
            try:
                a_star = harness.reference_equilibrium(cfg)
            except EquilibriumError:
                a_star = None
        for path in harness.cmd_plot(args.trajectory, out, a_star):
            print(path)
        return EXIT_OK
    cfg = _load(args)
    if args.command == "run":
        print(harness.cmd_run(cfg).summary.text(), end="")
    elif args.command == "compare":
        print(harness.cmd_compare(cfg).summary.text(), end="")
    elif args.command == "equilibrium":
        report = harness.cmd_equilibrium(cfg)
        print(report.summary(), end="" if report.summary().endswith("\n") else "\n")
    elif args.command == "analyze":
        print(harness.cmd_analyze(cfg, args.trajectory).text(), end="")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _dispatch(args)
    except NonpositiveTargetError as exc:
        print(f"error: nonpositive target: {exc}", file=sys.stderr)
        return EXIT_EQUILIBRIUM
    except EquilibriumError as exc:
        print(f"error: equilibrium infeasible: {exc}", file=sys.stderr)
        return EXIT_EQUILIBRIUM
    except NumericalAbort as exc:
        print(f"error: numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (ConfigError, harness.TrajectoryFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
