"""Schedule construction and Lyapunov coefficients shared by the anchored schemes."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigError
from ..schedules import (
    ScheduleKind,
    StepSchedule,
    default_eta0,
    popov_constant,
    residual_lipschitz_sq,
    split_popov_constant,
    validate_eta0,
)


def theorem_constants(theorem: str, L, gamma) -> dict:
    if theorem in ("anchored_popov", "split_aeg", "split_popov") and L is None:
        raise ConfigError(f"{theorem} needs a known Lipschitz constant")
    if theorem != "anchored_popov" and gamma is None:
        raise ConfigError(f"{theorem} needs gamma")
    return {"L": L, "gamma": gamma}


def theorem_schedule(theorem: str, L, gamma, cfg):
    """Schedule with theorem-compliant ``eta0`` unless experimental mode is on."""
    if cfg.schedule is not None:
        return cfg.schedule
    consts = theorem_constants(theorem, L, gamma)
    eta0 = cfg.eta0 if cfg.eta0 is not None else default_eta0(theorem, consts)
    report = validate_eta0(theorem, eta0, consts)
    if not report.ok and not cfg.experimental_eta0:
        raise ConfigError(report.message + " (enable experimental_eta0 to run anyway)")
    g = gamma
    if theorem == "anchored_popov":
        return StepSchedule(ScheduleKind.POPOV_EG, popov_constant(L, cfg.theta), eta0)
    if theorem == "split_aeg":
        return StepSchedule(ScheduleKind.POPOV_EG, residual_lipschitz_sq(L, g), eta0)
    if theorem == "split_popov":
        return StepSchedule(ScheduleKind.SPLIT_POPOV, split_popov_constant(L, g), eta0)
    if theorem == "accel_dr":
        return StepSchedule(ScheduleKind.ACCEL_DR, g, eta0)
    raise ConfigError(f"unknown theorem id {theorem!r}")


@dataclass(frozen=True)
class LyapunovCoefficients:
    a: float
    b: float
    c: float = 0.0


def coefficients(k: int, beta_k: float, eta_k: float) -> LyapunovCoefficients:
    """``b_k = k + 1`` and ``a_k = b_k eta_k / (2 beta_k)``; ``c`` is set per scheme."""
    b = float(k + 1)
    return LyapunovCoefficients(a=b * eta_k / (2.0 * beta_k), b=b)
