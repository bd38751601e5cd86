"""Least-squares rate fits of residual norms on log-log axes."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import linregress

from ..errors import NonPositiveResidual, WindowError

DEFAULT_WINDOW = (100, 10_000)
# residuals at or below this are round-off, not signal
RESIDUAL_FLOOR = 1e-13


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    k_range: tuple
    n_points: int
    truncated: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def fit_arrays(k, residuals, k_min: int = DEFAULT_WINDOW[0], k_max: int = DEFAULT_WINDOW[1],
               floor: float = RESIDUAL_FLOOR) -> RateFit:
    """Fit ``log10 r = slope * log10 k + intercept`` over ``k_min <= k <= k_max``.

    The window is cut at the first residual ``<= floor``; if fewer than three
    points survive, :class:`NonPositiveResidual` is raised.
    """
    k = np.asarray(k, dtype=float)
    r = np.asarray(residuals, dtype=float)
    if not 0 < k_min < k_max:
        raise WindowError(f"need 0 < k_min < k_max, got [{k_min}, {k_max}]")
    if k.size == 0 or k_max > k[-1]:
        last = None if k.size == 0 else int(k[-1])
        raise WindowError(f"k_max = {k_max} exceeds the last recorded k = {last}")
    m = (k >= k_min) & (k <= k_max)
    kw, rw = k[m], r[m]
    bad = np.flatnonzero(~(rw > floor))
    truncated = bad.size > 0
    if truncated:
        kw, rw = kw[: bad[0]], rw[: bad[0]]
    if kw.size < 3:
        raise NonPositiveResidual(
            f"residual reaches {floor:g} at k = {int(k[m][bad[0]]) if truncated else 'n/a'}; too few points to fit")
    fit = linregress(np.log10(kw), np.log10(rw))
    return RateFit(float(fit.slope), float(fit.intercept), float(fit.rvalue**2),
                   (int(kw[0]), int(kw[-1])), int(kw.size), truncated)


def fit_rate(trace, k_min: int = DEFAULT_WINDOW[0], k_max: int = DEFAULT_WINDOW[1],
             floor: float = RESIDUAL_FLOOR) -> RateFit:
    return fit_arrays(trace.k, trace.residuals, k_min, k_max, floor)
