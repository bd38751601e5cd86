"""Anchored Popov (past extra-gradient) scheme for ``0 = G(x)``.

    y_k     = beta_k x_0 + (1 - beta_k) x_k - eta_k G(y_{k-1})
    x_{k+1} = beta_k x_0 + (1 - beta_k) x_k - eta_k G(y_k)

with ``y_{-1} = x_0``.  Only ``G(y_k)`` is new in each iteration.
"""

from __future__ import annotations

import numpy as np

from ..operators import eval_forward
from .base import Scheme, SolverState
from .common import coefficients, theorem_schedule


class AnchoredPopov(Scheme):
    name = "anchored_popov"
    theorem = "anchored_popov"
    needs = ("G.forward",)
    popov_gap = True

    def make_schedule(self, ctx, cfg):
        return theorem_schedule(self.theorem, ctx.L, ctx.gamma, cfg)

    def start(self, ctx, x0, u0=None):
        g0 = eval_forward(ctx.op("G"), x0)
        return SolverState(self.name, 0, {"x0": x0.copy(), "x": x0.copy(), "y_prev": x0.copy(), "g_prev": g0})

    def step(self, ctx, st):
        p, k, s = st.points, st.k, ctx.schedule
        b, eta = s.beta(k), s.eta(k)
        base = b * p["x0"] + (1.0 - b) * p["x"]
        y = base - eta * p["g_prev"]
        g = eval_forward(ctx.op("G"), y)
        st.aux["gy_diff"] = float(np.linalg.norm(g - p["g_prev"]))
        p["x"] = base - eta * g
        p["y_prev"], p["g_prev"] = y, g
        st.k = k + 1

    def monitor(self, ctx, st):
        return ctx.G_raw(st.points["x"])

    def lyapunov(self, ctx, st, r):
        return popov_lyapunov(ctx, st, r)


def popov_lyapunov(ctx, st, r):
    """``a||G(x)||^2 + b<G(x), x - x0> + a L^2 ||x - y_prev||^2``."""
    s = ctx.schedule
    bk = s.beta(st.k)
    if bk <= 0:
        return None
    co = coefficients(st.k, bk, s.eta(st.k))
    p = st.points
    d = p["x"] - p["y_prev"]
    return float(co.a * (r @ r) + co.b * (r @ (p["x"] - p["x0"])) + co.a * ctx.L**2 * (d @ d))


class AnchoredPopovReflected(Scheme):
    """Same iterates written as an anchored reflected-gradient step.

        y_k = (beta_k - beta_{k-1} eta_k/eta_{k-1}) x_0
              + (1 - beta_k + eta_k/eta_{k-1}) x_k
              - (1 - beta_{k-1}) (eta_k/eta_{k-1}) x_{k-1}

    and ``x_{k+1}`` as in the two-line form.  At ``k = 0`` it reduces to
    ``y_0 = x_0 - eta_0 G(x_0)``.
    """

    name = "anchored_popov_reflected"
    theorem = "anchored_popov"
    needs = ("G.forward",)
    popov_gap = True

    def make_schedule(self, ctx, cfg):
        return theorem_schedule(self.theorem, ctx.L, ctx.gamma, cfg)

    def start(self, ctx, x0, u0=None):
        return SolverState(self.name, 0, {"x0": x0.copy(), "x": x0.copy(), "x_prev": x0.copy(), "y_prev": x0.copy()})

    def step(self, ctx, st):
        p, k, s = st.points, st.k, ctx.schedule
        b, eta = s.beta(k), s.eta(k)
        x0, x = p["x0"], p["x"]
        if k == 0:
            y = x0 - eta * eval_forward(ctx.op("G"), x0)
        else:
            bp, ep = s.beta(k - 1), s.eta(k - 1)
            rho = eta / ep
            y = (b - bp * rho) * x0 + (1.0 - b + rho) * x - (1.0 - bp) * rho * p["x_prev"]
        g = eval_forward(ctx.op("G"), y)
        p["x_prev"] = x
        p["x"] = b * x0 + (1.0 - b) * x - eta * g
        p["y_prev"] = y
        st.k = k + 1

    def monitor(self, ctx, st):
        return ctx.G_raw(st.points["x"])

    def lyapunov(self, ctx, st, r):
        return popov_lyapunov(ctx, st, r)
