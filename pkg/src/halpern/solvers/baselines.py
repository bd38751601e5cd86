"""Classical, non-accelerated baselines used for rate comparisons."""

from __future__ import annotations

from ..errors import ConfigError
from ..operators import eval_forward, eval_resolvent
from ..schedules import AnchoredConstantSchedule, FixedSchedule
from .base import Scheme, SolverState
from .split_aeg import initial_pair


def _constant_eta(ctx, cfg, factor: float) -> float:
    if cfg.eta is not None:
        return float(cfg.eta)
    if not ctx.L:
        raise ConfigError("baseline stepsize needs eta or a positive Lipschitz constant")
    return factor / ctx.L


class VanillaDR(Scheme):
    """``x = J_B(u)``, ``v = J_A(2x - u)``, ``u <- u + v - x``."""

    name = "vanilla_dr"
    needs = ("A.resolvent", "B.resolvent")
    uses_gamma = True

    def make_schedule(self, ctx, cfg):
        return FixedSchedule(0.0, ctx.gamma)

    def start(self, ctx, x0, u0=None):
        u0, x0 = initial_pair(ctx, x0, u0)
        return SolverState(self.name, 0, {"u0": u0, "u": u0.copy(), "x": x0})

    def step(self, ctx, st):
        p, g = st.points, ctx.gamma
        v = eval_resolvent(ctx.op("A"), g, 2.0 * p["x"] - p["u"])
        p["u"] = p["u"] + v - p["x"]
        p["x"] = eval_resolvent(ctx.op("B"), g, p["u"])
        st.k += 1

    def monitor(self, ctx, st):
        return ctx.Ggamma_pair_raw(st.points["x"], st.points["u"])


class VanillaEG(Scheme):
    """``y = x - eta G(x)``, ``x <- x - eta G(y)``; default ``eta = 0.5/L``."""

    name = "vanilla_eg"
    needs = ("G.forward",)

    def make_schedule(self, ctx, cfg):
        return FixedSchedule(0.0, _constant_eta(ctx, cfg, 0.5))

    def start(self, ctx, x0, u0=None):
        return SolverState(self.name, 0, {"x0": x0.copy(), "x": x0.copy()})

    def step(self, ctx, st):
        p, eta = st.points, ctx.schedule.eta(st.k)
        G = ctx.op("G")
        y = p["x"] - eta * eval_forward(G, p["x"])
        p["x"] = p["x"] - eta * eval_forward(G, y)
        st.k += 1

    def monitor(self, ctx, st):
        return ctx.G_raw(st.points["x"])


class VanillaPopov(Scheme):
    """Past extra-gradient: ``y_k = x_k - eta G(y_{k-1})``; default ``eta = 1/(3L)``."""

    name = "vanilla_popov"
    needs = ("G.forward",)
    popov_gap = True

    def make_schedule(self, ctx, cfg):
        return FixedSchedule(0.0, _constant_eta(ctx, cfg, 1.0 / 3.0))

    def start(self, ctx, x0, u0=None):
        g0 = eval_forward(ctx.op("G"), x0)
        return SolverState(self.name, 0, {"x0": x0.copy(), "x": x0.copy(), "y_prev": x0.copy(), "g_prev": g0})

    def step(self, ctx, st):
        p, eta = st.points, ctx.schedule.eta(st.k)
        y = p["x"] - eta * p["g_prev"]
        g = eval_forward(ctx.op("G"), y)
        p["x"] = p["x"] - eta * g
        p["y_prev"], p["g_prev"] = y, g
        st.k += 1

    def monitor(self, ctx, st):
        return ctx.G_raw(st.points["x"])


class AnchoredEG(Scheme):
    """Anchored extra-gradient with ``beta_k = 1/(k+2)`` and ``eta = 1/(8L)``.

    Two evaluations of ``G`` per iteration.
    """

    name = "anchored_eg"
    needs = ("G.forward",)

    def make_schedule(self, ctx, cfg):
        return AnchoredConstantSchedule(_constant_eta(ctx, cfg, 1.0 / 8.0))

    def start(self, ctx, x0, u0=None):
        return SolverState(self.name, 0, {"x0": x0.copy(), "x": x0.copy()})

    def step(self, ctx, st):
        p, k, s = st.points, st.k, ctx.schedule
        b, eta = s.beta(k), s.eta(k)
        G = ctx.op("G")
        base = b * p["x0"] + (1.0 - b) * p["x"]
        y = base - eta * eval_forward(G, p["x"])
        p["x"] = base - eta * eval_forward(G, y)
        st.k = k + 1

    def monitor(self, ctx, st):
        return ctx.G_raw(st.points["x"])
