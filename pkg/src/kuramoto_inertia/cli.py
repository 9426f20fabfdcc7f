"""Command-line front end.

Verbs::

    kuramoto-inertia run   <config.json>   execute the config's experiment
    kuramoto-inertia sweep <config.json>   expand and run a parameter sweep
    kuramoto-inertia check <config.json>   condition verdicts only, no simulation
    kuramoto-inertia w2    <a.csv> <b.csv> distance between two state snapshots

Flags ``--out``, ``--seed``, ``--dt``, ``--t-final`` override the config;
``--workers`` parallelizes independent runs.  Exit codes: 0 success, 2 when
any enabled bound monitor reported a violation, 1 on execution error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ResolvedConfig, apply_overrides, resolve_config
from .errors import ConfigError, SimulationError, ValidationError, VariantError
from .reports import (
    compute_verdicts,
    execute_convergence,
    execute_kinetic,
    execute_single,
    execute_stability,
    execute_sweep,
    fmt,
    json_ready,
    read_snapshot,
)
from .transport import EmpiricalMeasure, wasserstein2

_USER_ERRORS = (ConfigError, ValidationError, VariantError, SimulationError,
                OSError, json.JSONDecodeError)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", metavar="DIR", default=None,
                        help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, default=None, metavar="U64",
                        help="override the init sampler seed")
    parser.add_argument("--workers", type=int, default=1, metavar="INT",
                        help="worker processes for independent runs")
    parser.add_argument("--dt", type=float, default=None, metavar="REAL",
                        help="override integrator.dt")
    parser.add_argument("--t-final", type=float, default=None, metavar="REAL",
                        help="override integrator.t_final")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kuramoto-inertia",
        description="Simulate and analyze inertial Kuramoto oscillator ensembles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (("run", "execute the experiment in a config"),
                       ("sweep", "run a parameter sweep config"),
                       ("check", "evaluate condition verdicts without simulating")):
        p = sub.add_parser(name, help=desc)
        p.add_argument("config", type=Path)
        _add_common_flags(p)
    w2p = sub.add_parser("w2", help="Wasserstein-2 distance between two snapshots")
    w2p.add_argument("a", type=Path)
    w2p.add_argument("b", type=Path)
    w2p.add_argument("--seed", type=int, default=0, metavar="U64",
                     help="seed for sliced projections")
    return parser


def _load_config(args) -> ResolvedConfig:
    text = Path(args.config).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError("$", f"invalid JSON at line {err.lineno}: {err.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("$", "top level must be an object")
    raw = apply_overrides(raw, out_dir=args.out, seed=args.seed,
                          dt=args.dt, t_final=getattr(args, "t_final", None))
    return resolve_config(raw)


def _cmd_run(args) -> int:
    config = _load_config(args)
    out_dir = Path(config.output_dir)
    kind = config.experiment["kind"]
    if kind == "single":
        report = execute_single(config, out_dir)
    elif kind == "stability_pair":
        report = execute_stability(config, out_dir)
    elif kind == "meanfield_convergence":
        report = execute_convergence(config, out_dir, workers=args.workers)
    elif kind == "kinetic_sync":
        report = execute_kinetic(config, out_dir)
    else:
        print("config declares a sweep; use the `sweep` verb", file=sys.stderr)
        return 1
    print(f"run {config.config_hash[:12]} -> {out_dir}")
    if report.sync_time is not None:
        print(f"sync_time = {fmt(report.sync_time)}")
    for v in report.bound_violations:
        print(f"violation: {v['monitor']} at t={fmt(v['time'])} "
              f"value={fmt(v['value'])} bound={fmt(v['bound'])}")
    return 2 if report.bound_violations else 0


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    if config.experiment["kind"] != "sweep":
        print("sweep verb needs a config with experiment.kind = 'sweep'",
              file=sys.stderr)
        return 1
    out_dir = Path(config.output_dir)
    _, any_violation, any_error = execute_sweep(config, out_dir,
                                                workers=args.workers)
    print(f"sweep {config.config_hash[:12]} -> {out_dir / 'sweep.csv'}")
    if any_error:
        return 1
    return 2 if any_violation else 0


def _cmd_check(args) -> int:
    config = _load_config(args)
    payload = {"config_hash": config.config_hash,
               "verdicts": compute_verdicts(config)}
    print(json.dumps(json_ready(payload), indent=2, sort_keys=True))
    return 0


def _cmd_w2(args) -> int:
    theta_a, omega_a = read_snapshot(args.a)
    theta_b, omega_b = read_snapshot(args.b)
    result = wasserstein2(EmpiricalMeasure(theta_a, omega_a),
                          EmpiricalMeasure(theta_b, omega_b), seed=args.seed)
    print(f"{fmt(result.value)} ({result.method})")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "sweep": _cmd_sweep,
               "check": _cmd_check, "w2": _cmd_w2}[args.command]
    try:
        return handler(args)
    except _USER_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
