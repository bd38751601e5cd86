"""Splitting anchored extra-gradient for ``0 in A(x) + B(x)``.

With ``u_0 = x_0 + gamma B(x_0)``::

    v_k     = u_k + beta_k (u_0 - u_k) - eta_k G_gamma(x_k)
    y_k     = J_{gamma B}(v_k)
    u_{k+1} = u_k + beta_k (u_0 - u_k) - eta_k G_gamma(y_k)
    x_{k+1} = J_{gamma B}(u_{k+1})

The resolvent-only variant replaces each ``G_gamma(p)`` with
``(p - J_{gamma A}(2p - w)) / gamma`` where ``p = J_{gamma B}(w)``.
"""

from __future__ import annotations

import numpy as np

from ..operators import eval_forward, eval_resolvent, residual
from .base import Scheme, SolverState
from .common import coefficients, theorem_schedule


def initial_pair(ctx, x0, u0):
    """``(u_0, x_0)`` with ``x_0 = J_{gamma B}(u_0)``.

    Without an explicit ``u0`` this is ``u_0 = x_0 + gamma B(x_0)``; with one,
    ``x_0`` is recomputed from it.
    """
    if u0 is not None:
        u0 = np.array(u0, dtype=float)
        return u0, eval_resolvent(ctx.op("B"), ctx.gamma, u0)
    return x0 + ctx.gamma * eval_forward(ctx.op("B"), x0), x0.copy()


def anchor_lyapunov(ctx, st, r):
    """``a||G_gamma(x)||^2 + b<G_gamma(x), u - u0>``."""
    s = ctx.schedule
    bk = s.beta(st.k)
    if bk <= 0:
        return None
    co = coefficients(st.k, bk, s.eta(st.k))
    p = st.points
    return float(co.a * (r @ r) + co.b * (r @ (p["u"] - p["u0"])))


class SplitAEG(Scheme):
    name = "split_aeg"
    theorem = "split_aeg"
    needs = ("A.resolvent", "B.forward", "B.resolvent")
    uses_gamma = True

    def make_schedule(self, ctx, cfg):
        return theorem_schedule(self.theorem, ctx.L, ctx.gamma, cfg)

    def start(self, ctx, x0, u0=None):
        u0, x0 = initial_pair(ctx, x0, u0)
        return SolverState(self.name, 0, {"u0": u0, "u": u0.copy(), "x": x0})

    def step(self, ctx, st):
        p, k, s = st.points, st.k, ctx.schedule
        b, eta = s.beta(k), s.eta(k)
        JB = ctx.op("B")
        base = p["u"] + b * (p["u0"] - p["u"])
        v = base - eta * residual(ctx.rmap, p["x"])
        y = eval_resolvent(JB, ctx.gamma, v)
        p["u"] = base - eta * residual(ctx.rmap, y)
        p["x"] = eval_resolvent(JB, ctx.gamma, p["u"])
        st.k = k + 1

    def monitor(self, ctx, st):
        return ctx.Ggamma_raw(st.points["x"])

    def lyapunov(self, ctx, st, r):
        return anchor_lyapunov(ctx, st, r)


class SplitAEGResolventOnly(SplitAEG):
    name = "split_aeg_resolvent_only"
    needs = ("A.resolvent", "B.resolvent")

    def start(self, ctx, x0, u0=None):
        u0, x0 = initial_pair(ctx, x0, u0)
        return SolverState(self.name, 0, {"u0": u0, "u": u0.copy(), "x": x0})

    def step(self, ctx, st):
        p, k, s = st.points, st.k, ctx.schedule
        b, eta, g = s.beta(k), s.eta(k), ctx.gamma
        JA, JB = ctx.op("A"), ctx.op("B")
        u, x = p["u"], p["x"]
        base = u + b * (p["u0"] - u)
        v_hat = eval_resolvent(JA, g, 2.0 * x - u)
        v = base - (eta / g) * (x - v_hat)
        y = eval_resolvent(JB, g, v)
        u_hat = eval_resolvent(JA, g, 2.0 * y - v)
        p["u"] = base - (eta / g) * (y - u_hat)
        p["x"] = eval_resolvent(JB, g, p["u"])
        st.k = k + 1

    def monitor(self, ctx, st):
        return ctx.Ggamma_pair_raw(st.points["x"], st.points["u"])
