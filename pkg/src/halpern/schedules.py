"""Anchor weights and stepsize sequences for the anchored schemes.

Every schedule uses ``beta_k = 1/(k+2)``.  The stepsizes follow one of two
recurrences:

* Popov type, for a constant ``M`` (anchored Popov, split extra-gradient,
  split Popov)::

      eta_{k+1} = beta_{k+1} (1 - beta_k^2 - M eta_k^2) eta_k
                  / (beta_k (1 - beta_k) (1 - M eta_k^2))

* Douglas-Rachford type, for a resolvent step ``gamma``::

      eta_{k+1} = beta_{k+1} (2 gamma (1 - beta_k^2) - eta_k) eta_k
                  / (beta_k (1 - beta_k) (2 gamma - eta_k))

Both sequences are nonincreasing and converge to a positive limit when
``eta_0`` is admissible.
"""

from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from .errors import ScheduleDomainError

DEFAULT_HORIZON = 10**6

# Admissible-boundary comparisons accept a relative round-off of this size so
# that the closed-form defaults (e.g. 1/(2 L sqrt 3)) validate as ok.
_EDGE = 1e-12


class ScheduleKind(str, enum.Enum):
    POPOV_EG = "popov_eg"
    SPLIT_POPOV = "split_popov"
    ACCEL_DR = "accel_dr"


def beta(k: int) -> float:
    """Anchor weight ``1/(k+2)``."""
    if k < 0:
        raise ValueError("iteration index must be nonnegative")
    return 1.0 / (k + 2)


def next_eta_popov(eta_k: float, k: int, M: float) -> float:
    if eta_k < 0:
        raise ScheduleDomainError("stepsize must be nonnegative")
    m = M * eta_k * eta_k
    if m >= 1.0:
        raise ScheduleDomainError(f"M*eta^2 = {m:.6g} must stay below 1")
    b0, b1 = 1.0 / (k + 2), 1.0 / (k + 3)
    return b1 * (1.0 - b0 * b0 - m) * eta_k / (b0 * (1.0 - b0) * (1.0 - m))


def next_eta_dr(eta_k: float, k: int, gamma: float) -> float:
    if not gamma > 0:
        raise ScheduleDomainError("gamma must be positive")
    if eta_k < 0:
        raise ScheduleDomainError("stepsize must be nonnegative")
    if eta_k >= 2.0 * gamma:
        raise ScheduleDomainError(f"eta = {eta_k:.6g} must stay below 2*gamma = {2 * gamma:.6g}")
    b0, b1 = 1.0 / (k + 2), 1.0 / (k + 3)
    return b1 * (2.0 * gamma * (1.0 - b0 * b0) - eta_k) * eta_k / (b0 * (1.0 - b0) * (2.0 * gamma - eta_k))


def eta_lower_bound(kind, eta0: float, M_or_gamma: float) -> Optional[float]:
    """Analytic lower bound on the schedule limit, or ``None`` when none is known.

    Popov type: ``eta0 (1 - 2 M eta0^2) / (1 - M eta0^2)`` for ``eta0 < 1/sqrt(2M)``.
    DR type, with ``h = eta0/(2 gamma) < 1/2``: ``2 gamma h (1 - 2h) / (1 - h)``.
    """
    kind = ScheduleKind(kind)
    if eta0 <= 0:
        return None
    if kind is ScheduleKind.ACCEL_DR:
        h = eta0 / (2.0 * M_or_gamma)
        if h >= 0.5:
            return None
        return 2.0 * M_or_gamma * h * (1.0 - 2.0 * h) / (1.0 - h)
    m = M_or_gamma * eta0 * eta0
    if 2.0 * m >= 1.0:
        return None
    return eta0 * (1.0 - 2.0 * m) / (1.0 - m)


# -- constants ----------------------------------------------------------------


def popov_constant(L: float, theta: float = 1.0) -> float:
    """``M = 2 L^2 (1 + theta)`` for anchored Popov."""
    return 2.0 * L * L * (1.0 + theta)


def residual_lipschitz_sq(L: float, gamma: float) -> float:
    """``N = (1 + gamma L)^2 / gamma^2``, the squared Lipschitz constant of ``G_gamma``."""
    return (1.0 + gamma * L) ** 2 / gamma**2


def split_popov_constant(L: float, gamma: float) -> float:
    return 4.0 * residual_lipschitz_sq(L, gamma)


def split_popov_cap(L: float, gamma: float) -> float:
    """Largest admissible ``eta0`` for split Popov."""
    N = residual_lipschitz_sq(L, gamma)
    bar = 1.0 / (2.0 * (4.0 * gamma * L * L + math.sqrt(16.0 * gamma**2 * L**4 + 3.0 * N)))
    return min(bar, 1.0 / (2.0 * math.sqrt(3.0 * N)))


# -- eta0 validation ----------------------------------------------------------

THEOREM_IDS = ("anchored_popov", "split_aeg", "split_popov", "accel_dr")


@dataclass(frozen=True)
class Eta0Report:
    ok: bool
    eta0: float
    upper: float
    lower_exclusive: float = 0.0
    message: str = ""

    def __bool__(self):
        return self.ok


def eta0_cap(theorem: str, constants: dict) -> tuple[float, bool]:
    """Return ``(cap, inclusive)`` of the admissible ``eta0`` range."""
    if theorem == "anchored_popov":
        L = constants["L"]
        return (math.inf if L == 0 else 1.0 / (2.0 * L * math.sqrt(3.0))), True
    if theorem == "split_aeg":
        M = residual_lipschitz_sq(constants["L"], constants["gamma"])
        return 1.0 / math.sqrt(3.0 * M), True
    if theorem == "split_popov":
        return split_popov_cap(constants["L"], constants["gamma"]), True
    if theorem == "accel_dr":
        return float(constants["gamma"]), False
    raise ValueError(f"unknown theorem id {theorem!r}; expected one of {THEOREM_IDS}")


def validate_eta0(theorem: str, eta0: float, constants: dict) -> Eta0Report:
    """Check ``eta0`` against the admissible range guaranteeing the rate.

    Out-of-range values are reported, not raised; solvers accept them only in
    experimental mode.
    """
    cap, inclusive = eta0_cap(theorem, constants)
    if not eta0 > 0:
        return Eta0Report(False, eta0, cap, message="eta0 must be positive")
    if inclusive:
        ok = eta0 <= cap * (1.0 + _EDGE)
    else:
        ok = eta0 < cap
    rel = "<=" if inclusive else "<"
    msg = "" if ok else f"{theorem}: eta0 = {eta0:.6g} violates eta0 {rel} {cap:.6g}"
    return Eta0Report(ok, eta0, cap, message=msg)


def default_eta0(theorem: str, constants: dict) -> float:
    if theorem == "accel_dr":
        return 0.5 * constants["gamma"]
    cap, _ = eta0_cap(theorem, constants)
    return 1.0 if math.isinf(cap) else cap


# -- schedules ----------------------------------------------------------------


class StepSchedule:
    """Lazily extended, memoized ``(beta_k, eta_k)`` sequence.

    ``constant`` is ``M`` for the Popov-type kinds and ``gamma`` for
    ``ACCEL_DR``.  Extension of the memoized prefix is guarded by a lock so a
    schedule can be shared between runs.
    """

    def __init__(self, kind, constant: float, eta0: float):
        self.kind = ScheduleKind(kind)
        if not constant >= 0 or (self.kind is ScheduleKind.ACCEL_DR and constant == 0):
            raise ScheduleDomainError("schedule constant must be positive")
        if not eta0 > 0:
            raise ScheduleDomainError("eta0 must be positive")
        self.constant = float(constant)
        self.eta0 = float(eta0)
        self._step = next_eta_dr if self.kind is ScheduleKind.ACCEL_DR else next_eta_popov
        # validate the first step eagerly so bad eta0 fails at construction
        self._step(self.eta0, 0, self.constant)
        self._etas = [self.eta0]
        self._lock = threading.Lock()

    @property
    def M(self) -> Optional[float]:
        return None if self.kind is ScheduleKind.ACCEL_DR else self.constant

    @property
    def gamma(self) -> Optional[float]:
        return self.constant if self.kind is ScheduleKind.ACCEL_DR else None

    @property
    def lower_bound(self) -> Optional[float]:
        return eta_lower_bound(self.kind, self.eta0, self.constant)

    def beta(self, k: int) -> float:
        return beta(k)

    def eta(self, k: int) -> float:
        etas = self._etas
        if k < len(etas):
            return etas[k]
        self._extend(k)
        return self._etas[k]

    def _extend(self, k: int):
        with self._lock:
            etas = self._etas
            step, c = self._step, self.constant
            e = etas[-1]
            for j in range(len(etas) - 1, k):
                e = step(e, j, c)
                etas.append(e)

    def limit(self, horizon: int = DEFAULT_HORIZON) -> float:
        """``eta`` at ``horizon``, used as the numerical stand-in for the limit."""
        return schedule_limit(self.kind.value, self.constant, self.eta0, horizon)

    def describe(self) -> dict:
        d = {"kind": self.kind.value, "eta0": self.eta0}
        if self.kind is ScheduleKind.ACCEL_DR:
            d["gamma"] = self.constant
        else:
            d["M"] = self.constant
        d["eta_lower_bound"] = self.lower_bound
        return d


@lru_cache(maxsize=256)
def schedule_limit(kind: str, constant: float, eta0: float, horizon: int = DEFAULT_HORIZON) -> float:
    """Value of the recurrence at ``k = horizon``; no memo list is kept."""
    is_dr = ScheduleKind(kind) is ScheduleKind.ACCEL_DR
    step = next_eta_dr if is_dr else next_eta_popov
    e = step(float(eta0), 0, constant)  # domain check on the first step
    c = float(constant)
    # inlined recurrences; beta_{j+1}/(beta_j (1 - beta_j)) = (j+2)^2/((j+1)(j+3))
    if is_dr:
        two_g = 2.0 * c
        for j in range(1, horizon):
            b = 1.0 / (j + 2)
            e = (j + 2) ** 2 / ((j + 1) * (j + 3)) * (two_g * (1.0 - b * b) - e) * e / (two_g - e)
    else:
        for j in range(1, horizon):
            b = 1.0 / (j + 2)
            m = c * e * e
            e = (j + 2) ** 2 / ((j + 1) * (j + 3)) * (1.0 - b * b - m) * e / (1.0 - m)
    return e if horizon > 0 else float(eta0)


class FixedSchedule:
    """Constant ``beta`` and ``eta``; used for reductions and baselines."""

    def __init__(self, beta: float = 0.0, eta: float = 1.0):
        if not 0.0 <= beta < 1.0:
            raise ScheduleDomainError("beta must lie in [0, 1)")
        if not eta > 0:
            raise ScheduleDomainError("eta must be positive")
        self._beta = float(beta)
        self._eta = float(eta)
        self.eta0 = self._eta
        self.lower_bound = self._eta

    def beta(self, k: int) -> float:
        return self._beta

    def eta(self, k: int) -> float:
        return self._eta

    def limit(self, horizon: int = DEFAULT_HORIZON) -> float:
        return self._eta

    def describe(self) -> dict:
        return {"kind": "fixed", "beta": self._beta, "eta": self._eta}


class AnchoredConstantSchedule:
    """``beta_k = 1/(k+2)`` with a constant stepsize (anchored EG baseline)."""

    def __init__(self, eta: float):
        if not eta > 0:
            raise ScheduleDomainError("eta must be positive")
        self.eta0 = float(eta)
        self.lower_bound = self.eta0

    def beta(self, k: int) -> float:
        return beta(k)

    def eta(self, k: int) -> float:
        return self.eta0

    def limit(self, horizon: int = DEFAULT_HORIZON) -> float:
        return self.eta0

    def describe(self) -> dict:
        return {"kind": "anchored_constant", "eta": self.eta0}
