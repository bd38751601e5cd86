"""Splitting anchored Popov for ``0 in A(x) + B(x)``.

Forward form, with ``y_{-1} = x_0`` and ``u_0 = x_0 + gamma B(x_0)``::

    v_k     = x_k + beta_k (u_0 - x_k) - eta_k G_gamma(y_{k-1}) + gamma (1 - beta_k) B(y_{k-1})
    y_k     = J_{gamma B}(v_k)
    x_{k+1} = x_k + beta_k (u_0 - x_k) - eta_k G_gamma(y_k) - gamma B(y_k) + gamma (1 - beta_k) B(y_{k-1})

The DR form tracks ``u_k = x_k + gamma B(y_{k-1})`` and uses resolvents only::

    y_k     = J_{gamma B}(v_k)
    z_k     = J_{gamma A}(2 y_k - v_k)
    u_{k+1} = beta_k u_0 + (1 - beta_k) u_k - (eta_k / gamma)(y_k - z_k)
    v_{k+1} = beta_{k+1} u_0 + (1 - beta_{k+1}) u_{k+1} - (eta_{k+1} / gamma)(y_k - z_k)
    x_{k+1} = u_{k+1} - (v_k - y_k)

started from ``v_0 = u_0 - (eta_0 / gamma)(x_0 - J_{gamma A}(2 x_0 - u_0))``.
"""

from __future__ import annotations

import numpy as np

from ..operators import eval_forward, eval_resolvent
from ..schedules import residual_lipschitz_sq
from .base import Scheme, SolverState
from .common import coefficients, theorem_schedule
from .split_aeg import initial_pair


def split_popov_lyapunov(ctx, st, r, shifted):
    """``a||G_gamma(x)||^2 + b<G_gamma(x), x + gamma B(y_prev) - u0> + c||x - y_prev||^2``.

    ``shifted`` is ``x + gamma B(y_prev)``.
    """
    s = ctx.schedule
    bk = s.beta(st.k)
    if bk <= 0:
        return None
    eta = s.eta(st.k)
    co = coefficients(st.k, bk, eta)
    g, L = ctx.gamma, ctx.L
    c = co.b / (2.0 * bk) * (g * L * L + residual_lipschitz_sq(L, g) * eta)
    p = st.points
    d = p["x"] - p["y_prev"]
    return float(co.a * (r @ r) + co.b * (r @ (shifted - p["u0"])) + c * (d @ d))


class SplitPopov(Scheme):
    name = "split_popov"
    theorem = "split_popov"
    needs = ("A.resolvent", "B.forward", "B.resolvent")
    uses_gamma = True
    popov_gap = True

    def make_schedule(self, ctx, cfg):
        return theorem_schedule(self.theorem, ctx.L, ctx.gamma, cfg)

    def start(self, ctx, x0, u0=None):
        g = ctx.gamma
        u0, x0 = initial_pair(ctx, x0, u0)
        by = (u0 - x0) / g
        gy = (x0 - eval_resolvent(ctx.op("A"), g, x0 - g * by)) / g
        pts = {"x0": x0.copy(), "u0": u0, "x": x0, "y_prev": x0.copy(), "gy_prev": gy, "by_prev": by}
        return SolverState(self.name, 0, pts)

    def step(self, ctx, st):
        p, k, s, g = st.points, st.k, ctx.schedule, ctx.gamma
        b, eta = s.beta(k), s.eta(k)
        x = p["x"]
        base = x + b * (p["u0"] - x) + g * (1.0 - b) * p["by_prev"]
        v = base - eta * p["gy_prev"]
        y = eval_resolvent(ctx.op("B"), g, v)
        by = eval_forward(ctx.op("B"), y)
        gy = (y - eval_resolvent(ctx.op("A"), g, y - g * by)) / g
        p["x"] = base - eta * gy - g * by
        p["y_prev"], p["gy_prev"], p["by_prev"] = y, gy, by
        st.k = k + 1

    def monitor(self, ctx, st):
        return ctx.Ggamma_raw(st.points["x"])

    def lyapunov(self, ctx, st, r):
        p = st.points
        return split_popov_lyapunov(ctx, st, r, p["x"] + ctx.gamma * p["by_prev"])


class SplitPopovDR(SplitPopov):
    name = "split_popov_dr"
    needs = ("A.resolvent", "B.resolvent")

    def start(self, ctx, x0, u0=None):
        g = ctx.gamma
        u0, x0 = initial_pair(ctx, x0, u0)
        z = eval_resolvent(ctx.op("A"), g, 2.0 * x0 - u0)
        v = u0 - (ctx.schedule.eta(0) / g) * (x0 - z)
        pts = {"u0": u0, "u": u0.copy(), "v": v, "x": x0, "y_prev": x0.copy(), "v_prev": u0.copy()}
        return SolverState(self.name, 0, pts)

    def step(self, ctx, st):
        p, k, s, g = st.points, st.k, ctx.schedule, ctx.gamma
        b, eta = s.beta(k), s.eta(k)
        b1, eta1 = s.beta(k + 1), s.eta(k + 1)
        u0, v = p["u0"], p["v"]
        y = eval_resolvent(ctx.op("B"), g, v)
        z = eval_resolvent(ctx.op("A"), g, 2.0 * y - v)
        d = (y - z) / g
        u = b * u0 + (1.0 - b) * p["u"] - eta * d
        p["x"] = u - (v - y)
        p["u"] = u
        p["v_prev"], p["y_prev"] = v, y
        p["v"] = b1 * u0 + (1.0 - b1) * u - eta1 * d
        st.k = k + 1

    def lyapunov(self, ctx, st, r):
        # x_k + gamma B(y_{k-1}) is exactly u_k here
        return split_popov_lyapunov(ctx, st, r, st.points["u"])
