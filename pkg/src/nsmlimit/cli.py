"""Command line entry point: ``nsmlimit run|sweep|check|inspect``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .harness import run_single, run_sweep
from .snapshot import SnapshotError, read_snapshot
from .spectral import set_fft_workers
from .suites import SUITES, run_property_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _load(args):
    spec = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out"] = args.out
    return spec.with_(**changes) if changes else spec


def cmd_run(args) -> int:
    spec = _load(args)
    res = run_single(spec)
    print(f"status: {res.status}")
    for name, c in res.checks.items():
        print(f"  {name}: {c['value']:.3e} (tol {c['tol']:.1e}) {'ok' if c['passed'] else 'FAIL'}")
    if res.error:
        print(f"  error: {res.error}")
    print(f"output: {res.out}")
    return res.exit_code


def cmd_sweep(args) -> int:
    spec = _load(args)
    if spec.eps_ladder is None:
        raise ConfigError("params.eps_ladder: required for a sweep")
    rep = run_sweep(spec)
    print(f"status: {rep.status}")
    print("eps: " + " ".join(f"{e:g}" for e in rep.eps))
    print("consecutive sup E: " + " ".join(f"{v:.3e}" for v in rep.consecutive_sup_E))
    print("consecutive int D: " + " ".join(f"{v:.3e}" for v in rep.consecutive_int_D))
    if rep.nsmo_gap_sup_E:
        print("gap to limit (sup E): " + " ".join(f"{v:.3e}" for v in rep.nsmo_gap_sup_E))
    print(f"cauchy: {rep.verdict['cauchy']}")
    print(f"output: {rep.out}")
    return EXIT_OK if rep.status == "ok" and rep.verdict["cauchy"] else EXIT_FAIL


def cmd_check(args) -> int:
    seed = 0 if args.seed is None else args.seed
    result = run_property_suite(args.suite, seed)
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / f"check_{args.suite}.json").write_text(text)
    print(text)
    return EXIT_OK if result["passed"] else EXIT_FAIL


def cmd_inspect(args) -> int:
    header, state = read_snapshot(args.snapshot)
    print(json.dumps(header, indent=2, sort_keys=True))
    for name, f in zip(state.names, state.fields()):
        print(f"  |{name}|_L2 = {f.l2_norm():.6e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nsmlimit", description="Two-fluid Navier-Stokes-Maxwell solver and eps-limit harness.")
    p.add_argument("--version", action="version", version=f"nsmlimit {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="FFT worker threads")
    common.add_argument("--seed", type=int, default=None, help="override the initial-data / suite seed")
    common.add_argument("--out", default=None, help="output directory")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("run", parents=[common], help="single run with full diagnostics")
    s.add_argument("config")
    s.set_defaults(func=cmd_run)
    s = sub.add_parser("sweep", parents=[common], help="eps-ladder sweep with Cauchy verdict")
    s.add_argument("config")
    s.set_defaults(func=cmd_sweep)
    s = sub.add_parser("check", parents=[common], help="invariant suite")
    s.add_argument("suite", choices=SUITES)
    s.set_defaults(func=cmd_check)
    s = sub.add_parser("inspect", parents=[common], help="print a snapshot header and norms")
    s.add_argument("snapshot")
    s.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return EXIT_USAGE
        set_fft_workers(args.threads)
    np.seterr(over="ignore")
    try:
        return args.func(args)
    except (ConfigError, SnapshotError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
