"""Scheme registry and the generic run loop."""

from __future__ import annotations

import dataclasses
from typing import Optional, Union

import numpy as np

from ..errors import ConfigError, NonFiniteIterate, NonPositiveGamma
from ..operators import as_point, eval_forward
from ..schedules import StepSchedule
from .accel_dr import AccelDR, AccelDRConceptual
from .anchored_popov import AnchoredPopov, AnchoredPopovReflected
from .base import Context, IterationTrace, RunConfig, Scheme, SolverState
from .baselines import AnchoredEG, VanillaDR, VanillaEG, VanillaPopov
from .bounds import BoundConstants, primary_rhs
from .split_aeg import SplitAEG, SplitAEGResolventOnly
from .split_popov import SplitPopov, SplitPopovDR

SCHEMES: dict[str, Scheme] = {
    s.name: s
    for s in (
        AnchoredPopov(), AnchoredPopovReflected(), SplitAEG(), SplitAEGResolventOnly(),
        SplitPopov(), SplitPopovDR(), AccelDR(), AccelDRConceptual(),
        VanillaDR(), VanillaEG(), VanillaPopov(), AnchoredEG(),
    )
}

ACCELERATED = ("anchored_popov", "split_aeg", "split_popov", "accel_dr")


def get_scheme(scheme: Union[str, Scheme]) -> Scheme:
    if isinstance(scheme, Scheme):
        return scheme
    try:
        return SCHEMES[scheme]
    except KeyError:
        raise ConfigError(f"unknown scheme {scheme!r}; known: {sorted(SCHEMES)}") from None


def prepare(scheme, problem, cfg: RunConfig):
    """Build the evaluation context and initial state of a run."""
    scheme = get_scheme(scheme)
    gamma = None
    if scheme.uses_gamma:
        gamma = cfg.gamma if cfg.gamma is not None else getattr(problem, "gamma", None)
        if gamma is None:
            raise ConfigError(f"{scheme.name} needs gamma")
        if not gamma > 0:
            raise NonPositiveGamma(f"gamma must be positive, got {gamma}")
        gamma = float(gamma)
    ctx = Context(problem, gamma)
    ctx.require(*scheme.needs)
    ctx.schedule = scheme.make_schedule(ctx, cfg)
    x0 = as_point(cfg.x0 if cfg.x0 is not None else problem.x0)
    u0 = None if cfg.u0 is None else as_point(cfg.u0, x0.shape[0])
    state = scheme.start(ctx, x0, u0)
    return scheme, ctx, state


def lyapunov_value(scheme, state: SolverState, ctx: Context) -> Optional[float]:
    """Lyapunov value of ``state``; evaluations use the raw operators."""
    scheme = get_scheme(scheme)
    return scheme.lyapunov(ctx, state, scheme.monitor(ctx, state))


def _bound_constants(scheme, ctx, cfg, problem, state, res0_sq) -> Optional[BoundConstants]:
    xstar = getattr(problem, "known_solution", None)
    if scheme.theorem is None or xstar is None or not isinstance(ctx.schedule, StepSchedule):
        return None
    xstar = np.asarray(xstar, dtype=float)
    x0 = state.points.get("x0", state.points["x"])
    ustar_dist = None
    if "u0" in state.points and "B" in ctx.raw and ctx.raw["B"].has_forward:
        ustar = xstar + ctx.gamma * eval_forward(ctx.raw["B"], xstar)
        ustar_dist = float(np.linalg.norm(ustar - state.points["u0"]))
    return BoundConstants(
        theorem=scheme.theorem,
        eta0=ctx.schedule.eta0,
        eta_star=ctx.schedule.limit(cfg.horizon),
        dist=float(np.linalg.norm(x0 - xstar)),
        L=ctx.L,
        gamma=ctx.gamma,
        res0_sq=res0_sq,
        ustar_dist=ustar_dist,
    )


def _header(scheme, ctx, cfg, problem, bc) -> dict:
    s = ctx.schedule
    consts = {"L": ctx.L, "gamma": ctx.gamma}
    consts.update(s.describe())
    if bc is not None:
        consts["eta_star"] = bc.eta_star
        consts["dist"] = bc.dist
    return {
        "scheme": scheme.name,
        "theorem": scheme.theorem,
        "problem": getattr(problem, "id", type(problem).__name__),
        "config": cfg.echo(),
        "constants": consts,
        "bound": None if bc is None else bc.to_dict(),
    }


def run(scheme, problem, config: Optional[RunConfig] = None, **overrides) -> IterationTrace:
    """Iterate until the residual norm drops to ``tol`` or ``max_iters`` steps.

    Row ``k`` of the returned trace describes iterate ``x_k``.  ``tol = inf``
    disables the stopping test.  A non-finite iterate raises
    :class:`NonFiniteIterate` carrying the partial trace.
    """
    cfg = config if config is not None else RunConfig()
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    if cfg.max_iters < 0:
        raise ConfigError("max_iters must be nonnegative")
    scheme, ctx, st = prepare(scheme, problem, cfg)

    r = scheme.monitor(ctx, st)
    bc = _bound_constants(scheme, ctx, cfg, problem, st, float(r @ r))
    trace = IterationTrace(_header(scheme, ctx, cfg, problem, bc))
    if cfg.store_iterates:
        trace.iterates = []
    finite_tol = np.isfinite(cfg.tol)
    prev_r = None
    while True:
        res = float(np.linalg.norm(r))
        k = st.k
        row = {
            "k": k,
            "residual": res,
            "lyapunov": scheme.lyapunov(ctx, st, r) if cfg.track_lyapunov else None,
            "eta": ctx.schedule.eta(k),
            "beta": ctx.schedule.beta(k),
            "bound_rhs": None if bc is None else primary_rhs(bc, k),
            "gap": scheme.gap(st),
            "res_diff_sq": None if prev_r is None else float((r - prev_r) @ (r - prev_r)),
            "gy_diff": st.aux.pop("gy_diff", None),
        }
        row.update(ctx.eval_counts())
        trace.rows.append(row)
        if cfg.store_iterates:
            trace.iterates.append({n: p.copy() for n, p in st.points.items()})
        if (finite_tol and res <= cfg.tol) or k >= cfg.max_iters:
            break
        prev_r = r
        try:
            scheme.step(ctx, st)
            r = scheme.monitor(ctx, st)
        except NonFiniteIterate as exc:
            trace.status = "nonfinite"
            raise NonFiniteIterate(f"{scheme.name} at k={st.k}: {exc}", trace=trace) from exc
    trace.status = "converged" if finite_tol and res <= cfg.tol else "max_iters"
    trace.header["status"] = trace.status
    return trace


def iterate(scheme, problem, n: int, config: Optional[RunConfig] = None, **overrides) -> list:
    """States ``x_0 .. x_n`` of a run as copies, without monitoring."""
    cfg = config if config is not None else RunConfig()
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    scheme, ctx, st = prepare(scheme, problem, cfg)
    out = [st.copy()]
    for _ in range(n):
        scheme.step(ctx, st)
        out.append(st.copy())
    return out
