"""Shared solver plumbing: state, run configuration, trace, evaluation context."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from ..errors import MissingForward, MissingResolvent
from ..operators import EvalCounter, OperatorHandle, ResidualMap, counted, eval_forward, eval_resolvent, residual


@dataclass
class SolverState:
    """Iterate tuple of one scheme at iteration ``k``.

    ``points`` holds the named vectors the recurrence needs (``x``, ``y_prev``,
    ``u``, ``v``...), ``aux`` holds scalars or cached evaluations.  Anchors
    (``x0``, ``u0``) are never modified after ``start``.
    """

    scheme: str
    k: int
    points: dict
    aux: dict = field(default_factory=dict)

    def copy(self) -> "SolverState":
        return SolverState(self.scheme, self.k, {n: p.copy() for n, p in self.points.items()},
                           copy.deepcopy(self.aux))


@dataclass
class RunConfig:
    gamma: Optional[float] = None
    eta0: Optional[float] = None
    theta: float = 1.0
    eta: Optional[float] = None  # constant step for baselines
    max_iters: int = 1000
    tol: float = 1e-10
    track_lyapunov: bool = True
    store_iterates: bool = False
    experimental_eta0: bool = False
    schedule: Any = None  # explicit schedule object, overrides eta0/theta
    x0: Any = None
    u0: Any = None
    horizon: int = 10**6  # k at which the schedule is read off as eta_*

    def echo(self) -> dict:
        d = {}
        for name in ("gamma", "eta0", "theta", "eta", "max_iters", "tol", "track_lyapunov",
                     "store_iterates", "experimental_eta0", "horizon"):
            v = getattr(self, name)
            d[name] = v if not (isinstance(v, float) and not np.isfinite(v)) else str(v)
        if self.schedule is not None:
            d["schedule"] = self.schedule.describe()
        if self.x0 is not None:
            d["x0"] = np.asarray(self.x0, dtype=float).tolist()
        if self.u0 is not None:
            d["u0"] = np.asarray(self.u0, dtype=float).tolist()
        return d


@dataclass
class IterationTrace:
    """Header plus one row per recorded iterate ``k = 0, 1, ...``."""

    header: dict
    rows: list = field(default_factory=list)
    iterates: Optional[list] = None
    status: str = "running"

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if r.get(name) is None else r[name] for r in self.rows], dtype=float)

    @property
    def k(self) -> np.ndarray:
        return np.array([r["k"] for r in self.rows], dtype=int)

    @property
    def residuals(self) -> np.ndarray:
        return self.column("residual")

    def __len__(self):
        return len(self.rows)


class Context:
    """Operators a run works with.

    Stepping uses the counted wrappers; monitoring (residuals, Lyapunov values)
    uses the raw handles so that bookkeeping never inflates the counts.
    """

    def __init__(self, problem, gamma: Optional[float]):
        self.problem = problem
        self.gamma = gamma
        self.L = getattr(problem, "L", None)
        self.counters: dict[str, EvalCounter] = {}
        self.raw: dict[str, OperatorHandle] = {}
        self.ops: dict[str, OperatorHandle] = {}
        for name in ("G", "A", "B"):
            op = getattr(problem, name, None)
            if op is None:
                continue
            self.raw[name] = op
            self.ops[name], self.counters[name] = counted(op)
        self.schedule = None
        self._rmap = None
        self._rmap_raw = None

    def op(self, name: str) -> OperatorHandle:
        try:
            return self.ops[name]
        except KeyError:
            raise MissingForward(f"problem supplies no operator {name}") from None

    def require(self, *needs: str):
        """Check needs like ``'G.forward'`` or ``'A.resolvent'``."""
        for need in needs:
            name, what = need.split(".")
            op = self.raw.get(name)
            if what == "forward" and (op is None or not op.has_forward):
                raise MissingForward(f"scheme needs the forward map of {name}")
            if what == "resolvent" and (op is None or not op.has_resolvent):
                raise MissingResolvent(f"scheme needs the resolvent of {name}")

    @property
    def rmap(self) -> ResidualMap:
        """Residual map on the counted operators."""
        if self._rmap is None:
            self._rmap = ResidualMap(self.ops["A"], self.ops["B"], self.gamma)
        return self._rmap

    @property
    def rmap_raw(self) -> ResidualMap:
        if self._rmap_raw is None:
            self._rmap_raw = ResidualMap(self.raw["A"], self.raw["B"], self.gamma)
        return self._rmap_raw

    def eval_counts(self) -> dict:
        out = {}
        for name, c in self.counters.items():
            out[f"{name}_forward"] = c.forward
            out[f"{name}_resolvent"] = c.resolvent
        return out

    # monitoring helpers on raw operators
    def G_raw(self, x):
        return eval_forward(self.raw["G"], x)

    def Ggamma_raw(self, x):
        return residual(self.rmap_raw, x)

    def Ggamma_pair_raw(self, x, u):
        """``G_gamma(x)`` for ``x = J_{gamma B}(u)``; needs no forward map of B."""
        g = self.gamma
        return (x - eval_resolvent(self.raw["A"], g, 2.0 * x - u)) / g


class Scheme:
    """One iterative scheme.  Subclasses implement ``start`` and ``step``."""

    name = ""
    theorem: Optional[str] = None  # theorem id driving eta0 checks and bounds
    needs: tuple = ()
    uses_gamma = False
    popov_gap = False  # Lyapunov/bounds read ||x_k - y_{k-1}||

    def make_schedule(self, ctx: Context, cfg: RunConfig):
        raise NotImplementedError

    def start(self, ctx: Context, x0: np.ndarray, u0: Optional[np.ndarray]) -> SolverState:
        raise NotImplementedError

    def step(self, ctx: Context, st: SolverState) -> None:
        raise NotImplementedError

    def monitor(self, ctx: Context, st: SolverState) -> np.ndarray:
        """Residual vector at the current iterate, on raw operators."""
        raise NotImplementedError

    def lyapunov(self, ctx: Context, st: SolverState, r: np.ndarray) -> Optional[float]:
        return None

    def gap(self, st: SolverState) -> Optional[float]:
        if not self.popov_gap:
            return None
        return float(np.linalg.norm(st.points["x"] - st.points["y_prev"]))
