"""Config-driven runs, grids, comparison tables and offline Lyapunov replay.

A config is a JSON object::

    {"problem": "box-2" | {"generator": "random_affine", ...} | {<instance JSON>},
     "scheme": "split_aeg",
     "parameters": {"max_iters": 10000, "tol": "inf", "eta0": 0.1, ...},
     "seed": 0,
     "output": "runs/box2_split_aeg.csv"}

``parameters`` maps onto :class:`RunConfig` fields; ``schedule`` may be
``{"kind": "fixed", "beta": 0, "eta": 1}``.
"""

from __future__ import annotations

import csv
import dataclasses
import inspect
import io
import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .. import problems as P
from ..applications import solve_admm_accel, solve_admm_vanilla, solve_minimax_bilinear, solve_minimax_smooth
from ..errors import ConfigError, HalpernError
from ..schedules import AnchoredConstantSchedule, FixedSchedule, StepSchedule
from ..solvers import ACCELERATED, SCHEMES, RunConfig, SolverState, get_scheme, lyapunov_value, prepare, run
from .rates import fit_rate
from .trace_io import write_trace

GENERATORS = {
    "rotation": P.make_rotation,
    "affine_monotone": P.make_affine_monotone,
    "random_affine": P.make_random_affine,
    "box_inclusion": P.make_box_inclusion,
    "l1_quadratic": P.make_l1_quadratic,
}

APPLICATION_SCHEMES = ("minimax_smooth", "minimax_bilinear", "admm_accel", "admm_vanilla")

_CONFIG_KEYS = {"problem", "scheme", "parameters", "seed", "output", "name"}


def load_config(path: Union[str, Path]) -> Union[dict, list]:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def resolve_problem(spec, seed: Optional[int] = None):
    if isinstance(spec, str):
        return P.get_problem(spec)
    if not isinstance(spec, dict):
        raise ConfigError(f"problem must be a registry id or an object, got {type(spec).__name__}")
    if "generator" in spec:
        kw = {k: v for k, v in spec.items() if k != "generator"}
        try:
            gen = GENERATORS[spec["generator"]]
        except KeyError:
            raise ConfigError(f"unknown generator {spec['generator']!r}; known: {sorted(GENERATORS)}") from None
        if seed is not None and "seed" in inspect.signature(gen).parameters:
            kw.setdefault("seed", seed)
        try:
            return gen(**kw)
        except TypeError as exc:
            raise ConfigError(f"bad generator arguments: {exc}") from exc
    try:
        return P.ProblemInstance.from_json(spec)
    except KeyError as exc:
        raise ConfigError(f"problem object lacks field {exc}") from exc


def _schedule(spec):
    if spec is None or not isinstance(spec, dict):
        return spec
    kind = spec.get("kind")
    if kind == "fixed":
        return FixedSchedule(float(spec.get("beta", 0.0)), float(spec["eta"]))
    if kind == "anchored_constant":
        return AnchoredConstantSchedule(float(spec["eta"]))
    if kind in ("popov_eg", "split_popov", "accel_dr"):
        c = spec.get("constant", spec.get("M", spec.get("gamma")))
        if c is None:
            raise ConfigError(f"schedule {kind!r} needs a constant (M or gamma)")
        return StepSchedule(kind, float(c), float(spec["eta0"]))
    raise ConfigError(f"unknown schedule kind {kind!r}")


def make_run_config(params: Optional[dict]) -> RunConfig:
    params = dict(params or {})
    names = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(params) - names
    if unknown:
        raise ConfigError(f"unknown parameters: {sorted(unknown)}")
    if "tol" in params:
        params["tol"] = float(params["tol"])
    if "schedule" in params:
        params["schedule"] = _schedule(params["schedule"])
    try:
        return RunConfig(**params)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def config_from_echo(echo: dict) -> RunConfig:
    """Rebuild a :class:`RunConfig` from a trace header's config echo."""
    return make_run_config({k: v for k, v in echo.items() if k in {f.name for f in dataclasses.fields(RunConfig)}})


def validate_config(config: dict) -> dict:
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(config) - _CONFIG_KEYS
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    for key in ("problem", "scheme"):
        if key not in config:
            raise ConfigError(f"config lacks {key!r}")
    s = config["scheme"]
    if s not in SCHEMES and s not in APPLICATION_SCHEMES:
        raise ConfigError(f"unknown scheme {s!r}")
    return config


def _run_application(scheme: str, problem, cfg: RunConfig):
    pl = getattr(problem, "payload", None)
    fam = {"minimax_smooth": "minimax_smooth", "minimax_bilinear": "minimax_bilinear",
           "admm_accel": "admm", "admm_vanilla": "admm"}[scheme]
    if pl is None or pl.kind != fam:
        raise ConfigError(f"scheme {scheme} needs a {fam} problem, got {problem.kind}")
    x0 = problem.x0 if cfg.x0 is None else cfg.x0
    if scheme == "minimax_smooth":
        t = solve_minimax_smooth(pl, x0, cfg, known_solution=problem.known_solution)
    elif scheme == "minimax_bilinear":
        t = solve_minimax_bilinear(pl, x0, cfg)
    elif scheme == "admm_accel":
        t = solve_admm_accel(pl, cfg)
    else:
        t = solve_admm_vanilla(pl, cfg)
    t.header["problem"] = problem.id
    return t


def run_experiment(config: dict, out: Optional[Union[str, Path]] = None, timestamp: bool = True):
    """Run one config; write the trace when an output path is given.

    Solver errors are re-raised after the partial trace (if any) is written.
    """
    config = validate_config(config)
    seed = config.get("seed")
    problem = resolve_problem(config["problem"], seed)
    cfg = make_run_config(config.get("parameters"))
    path = out if out is not None else config.get("output")
    scheme = config["scheme"]
    try:
        if scheme in APPLICATION_SCHEMES:
            trace = _run_application(scheme, problem, cfg)
        else:
            trace = run(scheme, problem, cfg)
    except HalpernError as exc:
        partial = getattr(exc, "trace", None)
        if path is not None and partial is not None:
            write_trace(partial, path, timestamp)
        raise
    trace.header["seed"] = seed
    if path is not None:
        write_trace(trace, path, timestamp)
    return trace


def _grid_worker(args):
    config, out = args
    trace = run_experiment(config, out)
    return {"scheme": trace.header["scheme"], "rows": len(trace), "status": trace.status,
            "final_residual": trace.rows[-1]["residual"], "output": None if out is None else str(out)}


def run_grid(configs: list, out_dir: Optional[Union[str, Path]] = None, workers: int = 1) -> list:
    """Independent runs, in parallel processes when ``workers > 1``."""
    jobs = []
    for i, c in enumerate(configs):
        out = None
        if out_dir is not None:
            name = c.get("name") or f"{i:03d}_{c['scheme']}"
            out = Path(out_dir) / f"{name}.csv"
        jobs.append((c, out))
    if workers <= 1:
        return [_grid_worker(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_grid_worker, jobs))


COMPARE_COLUMNS = ("scheme", "problem", "iterations", "final_residual", "slope", "r_squared",
                   "evals_total", "evals_per_iter")


def _eval_total(row: dict) -> int:
    skip = {"k"}
    return int(sum(v for n, v in row.items() if n not in skip and isinstance(v, int)
                   and (n.endswith("_forward") or n.endswith("_resolvent") or n.endswith("_sub")
                        or n == "prox_pairs")))


def compare_rows(configs: list, k_min: int = 100, k_max: Optional[int] = None) -> list:
    if len(configs) < 2:
        raise ConfigError("compare needs at least two configs")
    probs = {json.dumps(c.get("problem"), sort_keys=True) for c in configs}
    if len(probs) != 1:
        raise ConfigError("compare needs configs on the same problem")
    rows = []
    for c in configs:
        t = run_experiment(c)
        n = int(t.k[-1])
        hi = n if k_max is None else min(k_max, n)
        try:
            fit = fit_rate(t, k_min, hi)
            slope, r2 = fit.slope, fit.r_squared
        except HalpernError:
            slope = r2 = None
        total = _eval_total(t.rows[-1])
        rows.append({
            "scheme": t.header["scheme"], "problem": t.header["problem"], "iterations": n,
            "final_residual": t.rows[-1]["residual"], "slope": slope, "r_squared": r2,
            "evals_total": total, "evals_per_iter": None if n == 0 else (total - _eval_total(t.rows[0])) / n,
        })
    return rows


def compare(configs: list, out: Optional[Union[str, Path]] = None, **kw) -> str:
    """Summary table as CSV text; also written to ``out`` if given."""
    rows = compare_rows(configs, **kw)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COMPARE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: "" if v is None else v for k, v in r.items()})
    text = buf.getvalue()
    if out is not None:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    return text


def replay_lyapunov(trace, problem) -> np.ndarray:
    """Recompute Lyapunov values from the stored iterates of a solver trace."""
    if not trace.iterates:
        raise ConfigError("trace has no stored iterates; rerun with store_iterates")
    scheme = get_scheme(trace.header["scheme"])
    cfg = config_from_echo(trace.header["config"])
    _, ctx, _ = prepare(scheme, problem, cfg)
    out = []
    for row, pts in zip(trace.rows, trace.iterates):
        st = SolverState(scheme.name, int(row["k"]), {n: np.asarray(v, dtype=float) for n, v in pts.items()})
        v = lyapunov_value(scheme, st, ctx)
        out.append(np.nan if v is None else v)
    return np.array(out)


def is_accelerated(scheme: str) -> bool:
    return scheme in ACCELERATED or scheme in APPLICATION_SCHEMES[:3] or scheme in (
        "anchored_popov_reflected", "split_aeg_resolvent_only", "split_popov_dr", "accel_dr_conceptual")
