"""Accelerated Douglas-Rachford splitting.

    x_k     = J_{gamma B}(u_k)
    v_k     = J_{gamma A}(2 x_k - u_k)
    u_{k+1} = beta_k u_0 + (1 - beta_k) u_k + (eta_k / gamma)(v_k - x_k)

With ``beta_k = 0`` and ``eta_k = gamma`` this is the classical DR step.  The
conceptual form ``u_{k+1} = u_k + beta_k (u_0 - u_k) - eta_k G_gamma(x_k)``
evaluates ``B`` and gives the same iterates.
"""

from __future__ import annotations

from ..operators import eval_resolvent, residual
from .base import Scheme, SolverState
from .common import theorem_schedule
from .split_aeg import anchor_lyapunov, initial_pair


class AccelDR(Scheme):
    name = "accel_dr"
    theorem = "accel_dr"
    needs = ("A.resolvent", "B.resolvent")
    uses_gamma = True

    def make_schedule(self, ctx, cfg):
        return theorem_schedule(self.theorem, ctx.L, ctx.gamma, cfg)

    def start(self, ctx, x0, u0=None):
        u0, x0 = initial_pair(ctx, x0, u0)
        return SolverState(self.name, 0, {"u0": u0, "u": u0.copy(), "x": x0})

    def step(self, ctx, st):
        p, k, s, g = st.points, st.k, ctx.schedule, ctx.gamma
        b, eta = s.beta(k), s.eta(k)
        u, x = p["u"], p["x"]
        v = eval_resolvent(ctx.op("A"), g, 2.0 * x - u)
        p["u"] = b * p["u0"] + (1.0 - b) * u + (eta / g) * (v - x)
        p["x"] = eval_resolvent(ctx.op("B"), g, p["u"])
        st.k = k + 1

    def monitor(self, ctx, st):
        return ctx.Ggamma_pair_raw(st.points["x"], st.points["u"])

    def lyapunov(self, ctx, st, r):
        return anchor_lyapunov(ctx, st, r)


class AccelDRConceptual(AccelDR):
    name = "accel_dr_conceptual"
    needs = ("A.resolvent", "B.forward", "B.resolvent")

    def step(self, ctx, st):
        p, k, s = st.points, st.k, ctx.schedule
        b, eta = s.beta(k), s.eta(k)
        u = p["u"]
        p["u"] = u + b * (p["u0"] - u) - eta * residual(ctx.rmap, p["x"])
        p["x"] = eval_resolvent(ctx.op("B"), ctx.gamma, p["u"])
        st.k = k + 1
