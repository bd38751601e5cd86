"""Accelerated ADMM for ``min f(z) + g(w)  s.t.  P z + Q w = r``.

With multiplier ``x`` and penalty ``gamma`` one iteration reads::

    z_{k+1}  = argmin_z f(z) + gamma/2 ||P z + Q w_k - r - x_k/gamma||^2
    xt_k     = beta_k u_0 + (1-beta_k) x_k - (eta_k - gamma)(P z_{k+1} - r)
               + ((1-beta_k) gamma - eta_k) Q w_k
    w_{k+1}  = argmin_w g(w) + gamma/2 ||P z_{k+1} + Q w - r - xt_k/gamma||^2
    x_{k+1}  = xt_k - gamma (P z_{k+1} + Q w_{k+1} - r)

This is accelerated Douglas-Rachford on the dual inclusion
``0 in A(x) + B(x)`` with ``A(x) = P df*(P'x) - r`` and ``B(x) = Q dg*(Q'x)``,
under ``u_k = x_k + gamma Q w_k``.  With ``beta_k = 0`` and ``eta_k = gamma``
the ``xt_k`` line collapses to ``xt_k = x_k``, which is standard ADMM.

Subproblems are solved exactly: quadratic terms by a cached factorization,
l1 terms by soft-thresholding when the coupling matrix is diagonal or
orthogonal.  Other combinations raise :class:`SubproblemFailure`.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from ..errors import ConfigError, DimensionMismatch, NonFiniteIterate, NonPositiveGamma, SubproblemFailure
from ..operators import OperatorHandle, as_point, soft_threshold
from ..schedules import FixedSchedule
from ..solvers import IterationTrace, RunConfig
from ..solvers.common import theorem_schedule

_ORTH_TOL = 1e-12


class QuadraticTerm:
    """``h(v) = v'Sv/2 + c'v`` with ``S`` symmetric PSD."""

    kind = "quadratic"

    def __init__(self, S, c=None):
        self.S = np.atleast_2d(np.array(S, float))
        n = self.S.shape[0]
        if self.S.shape != (n, n):
            raise DimensionMismatch("S must be square")
        self.c = np.zeros(n) if c is None else as_point(c, n)
        self._lu: dict = {}
        self._lock = threading.Lock()

    @property
    def dim(self) -> int:
        return self.S.shape[0]

    def value(self, v):
        return float(0.5 * v @ (self.S @ v) + self.c @ v)

    def gradient(self, v):
        return self.S @ v + self.c

    def argmin(self, C: np.ndarray, gamma: float, t: np.ndarray) -> np.ndarray:
        """``argmin_v h(v) + gamma/2 ||C v - t||^2`` via ``(S + gamma C'C) v = gamma C't - c``."""
        key = (id(C), float(gamma))
        with self._lock:
            fac = self._lu.get(key)
            if fac is None:
                Mat = self.S + gamma * (C.T @ C)
                if np.linalg.matrix_rank(Mat) < Mat.shape[0]:
                    raise SubproblemFailure("quadratic subproblem is singular")
                fac = (lu_factor(Mat), C)  # keep C alive so its id stays unique
                self._lu[key] = fac
        return lu_solve(fac[0], gamma * (C.T @ t) - self.c)

    def to_json(self) -> dict:
        return {"kind": "quadratic", "S": self.S.tolist(), "c": self.c.tolist()}


class L1Term:
    """``h(v) = lam ||v||_1``."""

    kind = "l1"

    def __init__(self, lam: float, dim: int):
        if lam < 0:
            raise ConfigError("lam must be nonnegative")
        self.lam = float(lam)
        self._dim = int(dim)

    @property
    def dim(self) -> int:
        return self._dim

    def value(self, v):
        return self.lam * float(np.abs(v).sum())

    def argmin(self, C: np.ndarray, gamma: float, t: np.ndarray) -> np.ndarray:
        off = C - np.diag(np.diag(C)) if C.shape[0] == C.shape[1] else None
        if off is not None and not off.any():
            p = np.diag(C)
            if np.any(p == 0):
                raise SubproblemFailure("l1 subproblem with a zero diagonal coupling entry")
            return soft_threshold(t / p, self.lam / (gamma * p * p))
        if C.shape[0] == C.shape[1] and np.allclose(C.T @ C, np.eye(C.shape[1]), atol=_ORTH_TOL, rtol=0):
            return soft_threshold(C.T @ t, self.lam / gamma)
        raise SubproblemFailure("l1 subproblem needs a diagonal or orthogonal coupling matrix")

    def to_json(self) -> dict:
        return {"kind": "l1", "lam": self.lam, "dim": self._dim}


def term_from_json(d: dict):
    if d["kind"] == "quadratic":
        return QuadraticTerm(d["S"], d.get("c"))
    if d["kind"] == "l1":
        return L1Term(d["lam"], d["dim"])
    raise ConfigError(f"unknown ADMM term kind {d['kind']!r}")


@dataclass
class AdmmProblem:
    P: np.ndarray
    Q: np.ndarray
    r: np.ndarray
    f: object
    g: object
    gamma: float = 1.0
    u0: Optional[np.ndarray] = None
    kind: str = field(default="admm", init=False)
    family: str = field(default="admm", init=False)

    def __post_init__(self):
        self.P = np.atleast_2d(np.array(self.P, float))
        self.Q = np.atleast_2d(np.array(self.Q, float))
        n = self.P.shape[0]
        self.r = as_point(self.r, n)
        if self.Q.shape[0] != n:
            raise DimensionMismatch(f"P has {n} rows but Q has {self.Q.shape[0]}")
        if self.f.dim != self.P.shape[1] or self.g.dim != self.Q.shape[1]:
            raise DimensionMismatch("term dimensions do not match the columns of P and Q")
        if not self.gamma > 0:
            raise NonPositiveGamma(f"gamma must be positive, got {self.gamma}")
        self.u0 = np.zeros(n) if self.u0 is None else as_point(self.u0, n)

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def nz(self) -> int:
        return self.P.shape[1]

    @property
    def nw(self) -> int:
        return self.Q.shape[1]

    @property
    def dim(self) -> int:
        """Length of the stacked point ``(z, w, x)``."""
        return self.nz + self.nw + self.n

    def f_sub(self, t, gamma=None):
        """``argmin_z f(z) + gamma/2 ||P z - t||^2``."""
        return self.f.argmin(self.P, self.gamma if gamma is None else gamma, t)

    def g_sub(self, t, gamma=None):
        return self.g.argmin(self.Q, self.gamma if gamma is None else gamma, t)

    def split(self, v):
        return v[: self.nz], v[self.nz: self.nz + self.nw], v[self.nz + self.nw:]

    def residual_at(self, v):
        """KKT residual of a stacked ``(z, w, x)``.

        ``z`` minimizes ``f - <P'x, .>`` iff ``z = argmin f + gamma/2||P. - Pz - x/gamma||^2``;
        likewise for ``w``.  The last block is the constraint violation.
        """
        z, w, x = self.split(as_point(v, self.dim))
        g = self.gamma
        return np.concatenate([
            z - self.f_sub(self.P @ z + x / g),
            w - self.g_sub(self.Q @ w + x / g),
            self.P @ z + self.Q @ w - self.r,
        ])

    def operators(self) -> dict:
        return {}

    def to_json(self) -> dict:
        return {"P": self.P.tolist(), "Q": self.Q.tolist(), "r": self.r.tolist(), "gamma": self.gamma,
                "u0": self.u0.tolist(), "f": self.f.to_json(), "g": self.g.to_json()}


def admm_from_json(d: dict) -> AdmmProblem:
    return AdmmProblem(P=d["P"], Q=d["Q"], r=d["r"], f=term_from_json(d["f"]), g=term_from_json(d["g"]),
                       gamma=float(d.get("gamma", 1.0)), u0=d.get("u0"))


def kkt_solution(prob: AdmmProblem) -> np.ndarray:
    """Stacked ``(z*, w*, x*)`` from the KKT system of a quadratic instance::

        S z + c = P'x,   T w + d = Q'x,   P z + Q w = r
    """
    f, g = prob.f, prob.g
    if not (isinstance(f, QuadraticTerm) and isinstance(g, QuadraticTerm)):
        raise SubproblemFailure("the KKT oracle covers quadratic terms only")
    nz, nw, n = prob.nz, prob.nw, prob.n
    K = np.block([
        [f.S, np.zeros((nz, nw)), -prob.P.T],
        [np.zeros((nw, nz)), g.S, -prob.Q.T],
        [prob.P, prob.Q, np.zeros((n, n))],
    ])
    rhs = np.concatenate([-f.c, -g.c, prob.r])
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    return sol


def dual_operators(prob: AdmmProblem) -> tuple[OperatorHandle, OperatorHandle]:
    """Resolvent-only handles of the dual operators.

    ``J_{gamma A}(y) = y - gamma (P z - r)`` with ``z = f_sub(r + y/gamma)`` and
    ``J_{gamma B}(u) = u - gamma Q w`` with ``w = g_sub(u/gamma)``.
    """

    def JA(gamma, y):
        z = prob.f_sub(prob.r + y / gamma, gamma)
        return y - gamma * (prob.P @ z - prob.r)

    def JB(gamma, u):
        w = prob.g_sub(u / gamma, gamma)
        return u - gamma * (prob.Q @ w)

    A = OperatorHandle(resolvent=JA, dim=prob.n, name="admm_dual_A")
    B = OperatorHandle(resolvent=JB, dim=prob.n, name="admm_dual_B")
    return A, B


def dual_dr_problem(prob: AdmmProblem, id: str = "admm-dual"):
    """Inclusion instance on the multiplier space for the DR solvers."""
    from ..problems import ProblemInstance

    A, B = dual_operators(prob)
    x0 = B.resolve(prob.gamma, prob.u0)
    ks = None
    if isinstance(prob.f, QuadraticTerm) and isinstance(prob.g, QuadraticTerm):
        ks = kkt_solution(prob)[prob.nz + prob.nw:]
    return ProblemInstance(id=id, kind="inclusion", dim=prob.n, x0=x0, A=A, B=B, gamma=prob.gamma,
                           known_solution=ks, certification=None if ks is None else "KKT-solve",
                           description="dual of a two-block linearly constrained problem")


def _rows_header(name, prob, cfg, sched):
    return {"scheme": name, "problem": "admm", "config": cfg.echo(),
            "constants": {"gamma": prob.gamma, **sched.describe()},
            "note": "primal feasibility has no rate guarantee; it is reported empirically"}


def _record(trace, cfg, k, prob, z, w, x, z_next, evals):
    P, Q, r = prob.P, prob.Q, prob.r
    dual = float(np.linalg.norm(P @ z_next + Q @ w - r))
    primal = float(np.linalg.norm(P @ z + Q @ w - r))
    trace.rows.append({"k": k, "residual": dual, "primal_infeas": primal,
                       "f_sub": evals[0], "g_sub": evals[1]})
    if cfg.store_iterates:
        trace.iterates.append({"z": z.copy(), "w": w.copy(), "x": x.copy(), "u": x + prob.gamma * (Q @ w)})
    return dual


def _admm_loop(prob: AdmmProblem, cfg: RunConfig, sched, name: str, accelerated: bool) -> IterationTrace:
    g, P, Q, r = prob.gamma, prob.P, prob.Q, prob.r
    u0 = prob.u0 if cfg.u0 is None else as_point(cfg.u0, prob.n)
    w = prob.g_sub(u0 / g)
    x = u0 - g * (Q @ w)
    evals = [0, 1]
    trace = IterationTrace(_rows_header(name, prob, cfg, sched))
    if cfg.store_iterates:
        trace.iterates = []
    z_next = prob.f_sub(r - Q @ w + x / g)
    evals[0] += 1
    z = z_next.copy()  # no z_0 exists; the first minimizer stands in for it
    k = 0
    while True:
        # ||P z_{k+1} + Q w_k - r|| equals ||G_gamma(x_k)|| of the dual inclusion
        res = _record(trace, cfg, k, prob, z, w, x, z_next, evals)
        if (np.isfinite(cfg.tol) and res <= cfg.tol) or k >= cfg.max_iters:
            break
        z = z_next
        Pz = P @ z
        if accelerated:
            b, eta = sched.beta(k), sched.eta(k)
            xt = b * u0 + (1.0 - b) * x - (eta - g) * (Pz - r) + ((1.0 - b) * g - eta) * (Q @ w)
        else:
            xt = x
        w = prob.g_sub(r - Pz + xt / g)
        x = xt - g * (Pz + Q @ w - r)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
            trace.status = "nonfinite"
            raise NonFiniteIterate("ADMM iterate became non-finite", trace=trace)
        z_next = prob.f_sub(r - Q @ w + x / g)
        evals[0] += 1
        evals[1] += 1
        k += 1
    trace.status = "converged" if np.isfinite(cfg.tol) and res <= cfg.tol else "max_iters"
    return trace


def solve_admm_accel(prob: AdmmProblem, config: Optional[RunConfig] = None) -> IterationTrace:
    """Accelerated ADMM with the accelerated-DR schedule in ``prob.gamma``.

    ``config.schedule`` overrides the schedule, e.g. ``FixedSchedule(0, gamma)``.
    """
    cfg = config or RunConfig()
    sched = theorem_schedule("accel_dr", None, prob.gamma, cfg)
    return _admm_loop(prob, cfg, sched, "admm_accel", True)


def solve_admm_vanilla(prob: AdmmProblem, config: Optional[RunConfig] = None) -> IterationTrace:
    cfg = config or RunConfig()
    return _admm_loop(prob, cfg, FixedSchedule(0.0, prob.gamma), "admm_vanilla", False)
