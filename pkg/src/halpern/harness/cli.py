"""Command line entry point: ``halpern {run,rates,bounds,compare,list-problems}``.

Exit codes: 0 when everything passes, 1 on a bound or rate failure (or a
solver error), 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from ..errors import ConfigError, HalpernError
from ..problems import list_problems
from .bounds import check_bound
from .experiment import compare, is_accelerated, load_config, run_experiment
from .rates import fit_rate
from .trace_io import read_trace

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _configs(args) -> list:
    if args.config is None:
        raise ConfigError("--config is required")
    cfg = load_config(args.config)
    items = cfg if isinstance(cfg, list) else [cfg]
    out = []
    for c in items:
        if not isinstance(c, dict):
            raise ConfigError("each config must be a JSON object")
        c = dict(c)
        params = dict(c.get("parameters") or {})
        if args.max_iters is not None:
            params["max_iters"] = args.max_iters
        if args.tol is not None:
            params["tol"] = args.tol
        if args.store_iterates:
            params["store_iterates"] = True
        if args.experimental_eta0:
            params["experimental_eta0"] = True
        c["parameters"] = params
        if args.seed is not None:
            c["seed"] = args.seed
        out.append(c)
    return out


def _out_path(args, c: dict, i: int) -> Optional[Path]:
    if args.out is None:
        return c.get("output")
    prob = c["problem"] if isinstance(c["problem"], str) else "problem"
    name = c.get("name") or f"{i:03d}_{prob}_{c['scheme']}"
    return Path(args.out) / f"{name}.csv"


def _traces(args):
    """Traces from ``--trace`` files, else from running ``--config``."""
    if args.trace:
        return [read_trace(p) for p in args.trace]
    return [run_experiment(c, _out_path(args, c, i)) for i, c in enumerate(_configs(args))]


def cmd_run(args) -> int:
    for i, c in enumerate(_configs(args)):
        path = _out_path(args, c, i)
        t = run_experiment(c, path)
        print(f"{t.header['scheme']} on {t.header['problem']}: {len(t)} rows, status={t.status}, "
              f"final residual={t.rows[-1]['residual']:.6e}" + (f" -> {path}" if path else ""))
    return EXIT_OK


def cmd_rates(args) -> int:
    code = EXIT_OK
    for t in _traces(args):
        scheme = t.header["scheme"]
        hi = min(args.k_max, int(t.k[-1]))
        try:
            fit = fit_rate(t, args.k_min, hi)
        except HalpernError as exc:
            print(f"SKIP {scheme}: {exc}")
            continue
        acc = is_accelerated(scheme)
        ok = fit.slope <= args.threshold
        tag = ("PASS" if ok else "FAIL") if acc else "INFO"
        if acc and not ok:
            code = EXIT_FAIL
        print(f"{tag} {scheme} on {t.header['problem']}: slope={fit.slope:.4f} r2={fit.r_squared:.4f} "
              f"k=[{fit.k_range[0]}, {fit.k_range[1]}]" + (" truncated" if fit.truncated else ""))
    return code


def cmd_bounds(args) -> int:
    code = EXIT_OK
    for t in _traces(args):
        theorem = args.theorem or t.header.get("theorem")
        if theorem is None:
            raise ConfigError(f"{t.header['scheme']} has no theorem bound; pass --theorem")
        rep = check_bound(t, theorem)
        print(rep.summary())
        if not rep.passed:
            code = EXIT_FAIL
    return code


def cmd_compare(args) -> int:
    out = None if args.out is None else Path(args.out) / "compare.csv"
    sys.stdout.write(compare(_configs(args), out))
    return EXIT_OK


def cmd_list(args) -> int:
    for p in list_problems():
        print(json.dumps(p, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (object or list of objects)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--max-iters", type=int, dest="max_iters")
    common.add_argument("--tol", type=float)
    common.add_argument("--store-iterates", action="store_true", dest="store_iterates")
    common.add_argument("--experimental-eta0", action="store_true", dest="experimental_eta0")

    ap = argparse.ArgumentParser(prog="halpern", description="Anchored splitting experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run configs and write traces").set_defaults(fn=cmd_run)
    r = sub.add_parser("rates", parents=[common], help="fit log-log residual slopes")
    r.add_argument("--trace", nargs="*", help="trace CSV files instead of --config")
    r.add_argument("--k-min", type=int, default=100, dest="k_min")
    r.add_argument("--k-max", type=int, default=10_000, dest="k_max")
    r.add_argument("--threshold", type=float, default=-0.9)
    r.set_defaults(fn=cmd_rates)
    b = sub.add_parser("bounds", parents=[common], help="check worst-case bound lines")
    b.add_argument("--trace", nargs="*")
    b.add_argument("--theorem")
    b.set_defaults(fn=cmd_bounds)
    sub.add_parser("compare", parents=[common], help="summary table of several configs").set_defaults(fn=cmd_compare)
    sub.add_parser("list-problems", parents=[common], help="list registered problems").set_defaults(fn=cmd_list)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HalpernError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
