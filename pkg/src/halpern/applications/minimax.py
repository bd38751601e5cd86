"""Anchored Popov applied to convex-concave saddle problems.

Smooth case: ``min_z max_w L(z, w)`` with the stacked monotone map
``G(z, w) = (grad_z L, -grad_w L)``.

Bilinear case: ``min_z max_w f(z) + <K z, w> - g(w)`` solved on the
equation ``G_H(x) = x - (H + G)^{-1}(H x) = 0`` where

    H = [[I/tau, -K^T], [-K, I/sigma]]

is positive definite when ``tau * sigma * ||K||^2 < 1``.  In the ``H`` inner
product ``G_H`` is monotone and 1-Lipschitz.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import ConfigError, DimensionMismatch, MetricNotPositiveDefinite
from ..operators import (
    OperatorHandle,
    as_point,
    eval_resolvent,
    operator_from_json,
    zero,
)
from ..schedules import FixedSchedule
from ..solvers import BoundConstants, IterationTrace, RunConfig, primary_rhs
from ..solvers.common import theorem_schedule


def _check_finite(*arrs):
    from ..errors import NonFiniteIterate

    for a in arrs:
        if not np.all(np.isfinite(a)):
            raise NonFiniteIterate("saddle iterate became non-finite")


# -- smooth ---------------------------------------------------------------------


@dataclass
class SmoothMinimax:
    """Smooth saddle function given by its partial gradients.

    Quadratic instances ``L = z'Pz/2 + w'Kz - w'Rw/2 + c'z - d'w`` keep their
    matrices in ``quad`` for serialization and the linear-solve oracle.
    """

    grad_z: Callable
    grad_w: Callable
    nz: int
    nw: int
    L_lip: float
    quad: Optional[dict] = None
    kind: str = "minimax_smooth"
    family: str = "minimax"

    @property
    def dim(self) -> int:
        return self.nz + self.nw

    def split(self, x):
        return x[: self.nz], x[self.nz:]

    def stacked(self, x):
        z, w = self.split(x)
        return np.concatenate([self.grad_z(z, w), -self.grad_w(z, w)])

    def operator(self) -> OperatorHandle:
        """``G(x) = (grad_z L, -grad_w L)`` on the concatenated point."""
        return OperatorHandle(forward=self.stacked, lipschitz=self.L_lip, dim=self.nz + self.nw,
                              name="minimax_stacked")

    def residual_at(self, x):
        return self.stacked(as_point(x, self.nz + self.nw))

    def operators(self) -> dict:
        return {"G": self.operator()}

    def to_json(self) -> dict:
        if self.quad is None:
            raise ConfigError("only quadratic saddle functions serialize")
        return {k: np.asarray(v).tolist() for k, v in self.quad.items()}


def quadratic_minimax(P, K, R, c=None, d=None) -> SmoothMinimax:
    """``L(z, w) = z'Pz/2 + w'Kz - w'Rw/2 + c'z - d'w`` with ``P, R`` PSD."""
    P, R = np.atleast_2d(np.array(P, float)), np.atleast_2d(np.array(R, float))
    K = np.atleast_2d(np.array(K, float))
    nz, nw = P.shape[0], R.shape[0]
    if K.shape != (nw, nz):
        raise DimensionMismatch(f"K must be {nw}x{nz}, got {K.shape}")
    c = np.zeros(nz) if c is None else as_point(c, nz)
    d = np.zeros(nw) if d is None else as_point(d, nw)
    J = np.block([[P, K.T], [-K, R]])
    return SmoothMinimax(
        grad_z=lambda z, w: P @ z + K.T @ w + c,
        grad_w=lambda z, w: K @ z - R @ w - d,
        nz=nz, nw=nw, L_lip=float(np.linalg.norm(J, 2)),
        quad={"P": P, "K": K, "R": R, "c": c, "d": d},
    )


def quadratic_saddle(mm: SmoothMinimax) -> np.ndarray:
    """Saddle point of a quadratic instance by a direct linear solve."""
    q = mm.quad
    J = np.block([[q["P"], q["K"].T], [-q["K"], q["R"]]])
    rhs = -np.concatenate([q["c"], q["d"]])
    return np.linalg.lstsq(J, rhs, rcond=None)[0]


def solve_minimax_smooth(mm: SmoothMinimax, x0, config: Optional[RunConfig] = None,
                         known_solution=None) -> IterationTrace:
    """Anchored Popov written out on ``(z, w)``::

        z_{k+1} = beta_k z_0 + (1-beta_k) z_k - eta_k grad_z L(zh_k, wh_k)
        w_{k+1} = beta_k w_0 + (1-beta_k) w_k + eta_k grad_w L(zh_k, wh_k)
        zh_{k+1} = beta_{k+1} z_0 + (1-beta_{k+1}) z_{k+1} - eta_{k+1} grad_z L(zh_k, wh_k)
        wh_{k+1} = beta_{k+1} w_0 + (1-beta_{k+1}) w_{k+1} + eta_{k+1} grad_w L(zh_k, wh_k)

    starting from ``(zh_0, wh_0) = (z_0, w_0) - eta_0 G(z_0, w_0)``.  The trace
    records ``||grad L(z_k, w_k)||``.
    """
    cfg = config or RunConfig()
    sched = theorem_schedule("anchored_popov", mm.L_lip, None, cfg)
    x0 = as_point(x0, mm.nz + mm.nw)
    z0, w0 = mm.split(x0)
    z, w = z0.copy(), w0.copy()
    evals = 1
    e0 = sched.eta(0)
    gz, gw = mm.grad_z(z0, w0), mm.grad_w(z0, w0)
    zh, wh = z0 - e0 * gz, w0 + e0 * gw

    bc = None
    if known_solution is not None and hasattr(sched, "kind"):
        g0 = mm.stacked(x0)
        bc = BoundConstants("anchored_popov", sched.eta0, sched.limit(cfg.horizon),
                            float(np.linalg.norm(x0 - np.asarray(known_solution))), L=mm.L_lip,
                            res0_sq=float(g0 @ g0))
    trace = IterationTrace({"scheme": "minimax_smooth", "problem": "minimax_smooth", "config": cfg.echo(),
                            "constants": {"L": mm.L_lip, **sched.describe()},
                            "bound": None if bc is None else bc.to_dict()})
    if cfg.store_iterates:
        trace.iterates = []
    k = 0
    while True:
        res = float(np.linalg.norm(np.concatenate([mm.grad_z(z, w), mm.grad_w(z, w)])))
        trace.rows.append({"k": k, "residual": res, "eta": sched.eta(k), "beta": sched.beta(k),
                           "bound_rhs": None if bc is None else primary_rhs(bc, k), "G_forward": evals})
        if cfg.store_iterates:
            trace.iterates.append({"z": z.copy(), "w": w.copy(), "zh": zh.copy(), "wh": wh.copy()})
        if (np.isfinite(cfg.tol) and res <= cfg.tol) or k >= cfg.max_iters:
            break
        b, e = sched.beta(k), sched.eta(k)
        b1, e1 = sched.beta(k + 1), sched.eta(k + 1)
        gz, gw = mm.grad_z(zh, wh), mm.grad_w(zh, wh)
        evals += 1
        z = b * z0 + (1 - b) * z - e * gz
        w = b * w0 + (1 - b) * w + e * gw
        zh = b1 * z0 + (1 - b1) * z - e1 * gz
        wh = b1 * w0 + (1 - b1) * w + e1 * gw
        _check_finite(z, w)
        k += 1
    trace.status = "converged" if np.isfinite(cfg.tol) and res <= cfg.tol else "max_iters"
    return trace


# -- bilinear -------------------------------------------------------------------


@dataclass
class BilinearMinimax:
    """``min_z max_w f(z) + <K z, w> - g(w)``; ``f``, ``g`` enter through their
    proximal maps, given as resolvent-only operators."""

    K: np.ndarray
    f: OperatorHandle = field(default_factory=zero)
    g: OperatorHandle = field(default_factory=zero)
    kind: str = "minimax_bilinear"
    family: str = "minimax"

    def __post_init__(self):
        self.K = np.atleast_2d(np.array(self.K, float))

    @property
    def nz(self) -> int:
        return self.K.shape[1]

    @property
    def nw(self) -> int:
        return self.K.shape[0]

    @property
    def dim(self) -> int:
        return self.nz + self.nw

    @property
    def norm_K(self) -> float:
        return float(np.linalg.norm(self.K, 2))

    def default_steps(self) -> tuple[float, float]:
        t = 0.99 / self.norm_K if self.norm_K > 0 else 1.0
        return t, t

    def metric(self, tau: float, sigma: float) -> np.ndarray:
        if not (tau > 0 and sigma > 0) or tau * sigma * self.norm_K**2 >= 1.0:
            raise MetricNotPositiveDefinite(
                f"tau*sigma*||K||^2 = {tau * sigma * self.norm_K**2:.6g} must be below 1")
        K = self.K
        return np.block([[np.eye(self.nz) / tau, -K.T], [-K, np.eye(self.nw) / sigma]])

    def prox_pair(self, z, w, tau, sigma):
        """``(H + G)^{-1}(H x)``: ``s = prox_{tau f}(z - tau K'w)``,
        ``r = prox_{sigma g}(w + sigma K(2s - z))``."""
        s = eval_resolvent(self.f, tau, z - tau * (self.K.T @ w))
        r = eval_resolvent(self.g, sigma, w + sigma * (self.K @ (2.0 * s - z)))
        return s, r

    def G_H(self, x, tau, sigma):
        z, w = x[: self.nz], x[self.nz:]
        s, r = self.prox_pair(z, w, tau, sigma)
        return np.concatenate([z - s, w - r])

    def operator(self, tau=None, sigma=None) -> OperatorHandle:
        if tau is None or sigma is None:
            tau, sigma = self.default_steps()
        self.metric(tau, sigma)
        return OperatorHandle(forward=lambda x: self.G_H(x, tau, sigma), lipschitz=None,
                              dim=self.nz + self.nw, name="G_H")

    def residual_at(self, x):
        tau, sigma = self.default_steps()
        return self.G_H(as_point(x, self.nz + self.nw), tau, sigma)

    def operators(self) -> dict:
        return {"G": self.operator()}

    def to_json(self) -> dict:
        return {"K": self.K.tolist(), "f": self.f.to_json(), "g": self.g.to_json()}


def h_norm(H: np.ndarray, v: np.ndarray) -> float:
    return float(np.sqrt(max(v @ (H @ v), 0.0)))


def solve_minimax_bilinear(bm: BilinearMinimax, x0, config: Optional[RunConfig] = None,
                           tau: Optional[float] = None, sigma: Optional[float] = None) -> IterationTrace:
    """Anchored Popov on ``G_H`` with ``L = 1`` in the ``H`` metric::

        s_k  = prox_{tau f}(zh_k - tau K' wh_k)
        r_k  = prox_{sigma g}(wh_k + sigma K (2 s_k - zh_k))
        z_{k+1}  = beta_k z_0 + (1-beta_k) z_k - eta_k (zh_k - s_k)
        w_{k+1}  = beta_k w_0 + (1-beta_k) w_k - eta_k (wh_k - r_k)
        zh_{k+1} = beta_{k+1} z_0 + (1-beta_{k+1}) z_{k+1} - eta_{k+1} (zh_k - s_k)
        wh_{k+1} = beta_{k+1} w_0 + (1-beta_{k+1}) w_{k+1} - eta_{k+1} (wh_k - r_k)

    The trace reports ``||G_H(x_k)||_H`` as ``residual`` and the Euclidean
    norm as ``residual_euclid``.
    """
    cfg = config or RunConfig()
    if tau is None or sigma is None:
        tau, sigma = bm.default_steps()
    H = bm.metric(tau, sigma)
    sched = theorem_schedule("anchored_popov", 1.0, None, cfg)
    nz = bm.nz
    x0 = as_point(x0, nz + bm.nw)
    z0, w0 = x0[:nz].copy(), x0[nz:].copy()
    z, w = z0.copy(), w0.copy()
    s, r = bm.prox_pair(z0, w0, tau, sigma)
    e0 = sched.eta(0)
    zh, wh = z0 - e0 * (z0 - s), w0 - e0 * (w0 - r)
    prox_calls = 1

    trace = IterationTrace({"scheme": "minimax_bilinear", "problem": "minimax_bilinear", "config": cfg.echo(),
                            "constants": {"L": 1.0, "tau": tau, "sigma": sigma, "norm_K": bm.norm_K,
                                          **sched.describe()}})
    if cfg.store_iterates:
        trace.iterates = []
    k = 0
    while True:
        gh = bm.G_H(np.concatenate([z, w]), tau, sigma)
        res = h_norm(H, gh)
        trace.rows.append({"k": k, "residual": res, "residual_euclid": float(np.linalg.norm(gh)),
                           "eta": sched.eta(k), "beta": sched.beta(k), "prox_pairs": prox_calls})
        if cfg.store_iterates:
            trace.iterates.append({"z": z.copy(), "w": w.copy(), "zh": zh.copy(), "wh": wh.copy()})
        if (np.isfinite(cfg.tol) and res <= cfg.tol) or k >= cfg.max_iters:
            break
        b, e = sched.beta(k), sched.eta(k)
        b1, e1 = sched.beta(k + 1), sched.eta(k + 1)
        s, r = bm.prox_pair(zh, wh, tau, sigma)
        prox_calls += 1
        dz, dw = zh - s, wh - r
        z = b * z0 + (1 - b) * z - e * dz
        w = b * w0 + (1 - b) * w - e * dw
        zh = b1 * z0 + (1 - b1) * z - e1 * dz
        wh = b1 * w0 + (1 - b1) * w - e1 * dw
        _check_finite(z, w)
        k += 1
    trace.status = "converged" if np.isfinite(cfg.tol) and res <= cfg.tol else "max_iters"
    return trace


def bilinear_from_json(d: dict) -> BilinearMinimax:
    return BilinearMinimax(K=np.array(d["K"], float), f=operator_from_json(d["f"]), g=operator_from_json(d["g"]))


def smooth_from_json(d: dict) -> SmoothMinimax:
    return quadratic_minimax(d["P"], d["K"], d["R"], d.get("c"), d.get("d"))
