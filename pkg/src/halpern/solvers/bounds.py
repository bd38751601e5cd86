"""Right-hand sides of the worst-case residual bounds of the anchored schemes.

All bounds read ``eta_*`` as the schedule value far out (``k = 10**6`` by
default) and ``d = ||x_0 - x*||``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

from ..schedules import residual_lipschitz_sq


@dataclass(frozen=True)
class BoundConstants:
    theorem: str
    eta0: float
    eta_star: float
    dist: float
    L: Optional[float] = None
    gamma: Optional[float] = None
    res0_sq: Optional[float] = None  # squared residual at x_0
    ustar_dist: Optional[float] = None  # ||u* - u_0||, u* = x* + gamma B(x*)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BoundConstants":
        return cls(**{k: d.get(k) for k in cls.__dataclass_fields__})


def c_star(bc: BoundConstants) -> float:
    e0, es, L, g = bc.eta0, bc.eta_star, bc.L, bc.gamma
    if bc.theorem == "anchored_popov":
        return 4.0 * (e0 * es * L * L + 1.0) / es**2
    if bc.theorem in ("split_aeg", "split_popov"):
        return residual_lipschitz_sq(L, g) * (e0 * es + g * g) / es
    if bc.theorem == "accel_dr":
        return 4.0 * (1.0 + g * L) ** 2 * (e0 * es + g * g) / (es * es * g * g)
    raise ValueError(f"unknown theorem id {bc.theorem!r}")


def _kk(k):
    return (k + 1.0) * (k + 2.0)


# each line: name -> (rhs(bc, k), description of the left-hand side)


def popov_main(bc, k):
    """Bound on ``||G(x_k)||^2 + 2 L^2 ||x_k - y_{k-1}||^2``."""
    return 4.0 / (bc.eta_star * _kk(k)) * (bc.eta0 * bc.res0_sq + bc.dist**2 / bc.eta_star)


def popov_residual(bc, k):
    return c_star(bc) * bc.dist**2 / _kk(k)


def popov_gap(bc, k):
    return c_star(bc) * bc.dist**2 / (2.0 * bc.L**2 * _kk(k))


def popov_gy_diff(bc, k):
    """Bound on ``||G(y_k) - G(y_{k-1})||^2``."""
    return c_star(bc) * bc.dist**2 / (2.0 * bc.L**2 * bc.eta_star**2 * (k + 2.0) * (k + 3.0))


def popov_envelope_90(bc, k):
    return 90.0 * bc.L**2 * bc.dist**2 / _kk(k)


def split_residual(bc, k):
    return 4.0 * c_star(bc) * bc.dist**2 / (bc.eta_star * _kk(k))


def split_aeg_summable(bc):
    return c_star(bc) * bc.dist**2 / bc.gamma


def split_popov_gap(bc, k):
    g, L = bc.gamma, bc.L
    N = residual_lipschitz_sq(L, g)
    denom = (2.0 * (g * L * L + N * bc.eta_star) * (k + 2.0) - g * L * L) * (k + 1.0)
    return 4.0 * c_star(bc) * bc.dist**2 / denom


def dr_residual(bc, k):
    """Bound on ``||G_gamma(x_k)||^2`` using ``||u* - u_0||``."""
    return 4.0 / (bc.eta_star * _kk(k)) * (bc.eta0 * bc.res0_sq + bc.ustar_dist**2 / bc.eta_star)


def dr_residual_lipschitz(bc, k):
    return c_star(bc) * bc.dist**2 / _kk(k)


def primary_rhs(bc: BoundConstants, k: int) -> Optional[float]:
    """Bound on the squared residual norm recorded in the trace."""
    t = bc.theorem
    if t == "anchored_popov":
        return popov_residual(bc, k)
    if t in ("split_aeg", "split_popov"):
        return split_residual(bc, k)
    if t == "accel_dr":
        if bc.L is not None:
            return dr_residual_lipschitz(bc, k)
        if bc.ustar_dist is not None:
            return dr_residual(bc, k)
    return None
