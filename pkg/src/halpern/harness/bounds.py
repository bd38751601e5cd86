"""Pointwise comparison of a trace against its worst-case bound lines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import ConfigError, MissingSolution
from ..schedules import THEOREM_IDS
from ..solvers import bounds as B

REL_SLACK = 1e-9


@dataclass
class LineReport:
    name: str
    passed: bool
    max_violation: float  # max of lhs - rhs(1 + slack); <= 0 when the line holds
    worst_k: Optional[int]
    n_checked: int
    failing_k: list = field(default_factory=list)
    informational: bool = False

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["failing_k"] = self.failing_k[:20]
        return d


@dataclass
class BoundReport:
    theorem: str
    lines: dict

    @property
    def passed(self) -> bool:
        return all(l.passed for l in self.lines.values() if not l.informational)

    def to_dict(self) -> dict:
        return {"theorem": self.theorem, "passed": self.passed,
                "lines": {n: l.to_dict() for n, l in self.lines.items()}}

    def summary(self) -> str:
        out = []
        for n, l in self.lines.items():
            tag = "PASS" if l.passed else "FAIL"
            extra = " (informational)" if l.informational else ""
            out.append(f"{tag} {self.theorem}:{n} max_violation={l.max_violation:.3e} "
                       f"at k={l.worst_k} over {l.n_checked} rows{extra}")
        return "\n".join(out)


def compare_line(name, ks, lhs, rhs, slack=REL_SLACK, informational=False) -> LineReport:
    ks = np.asarray(ks)
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    ok = np.isfinite(lhs) & np.isfinite(rhs)
    ks, lhs, rhs = ks[ok], lhs[ok], rhs[ok]
    if ks.size == 0:
        return LineReport(name, True, float("-inf"), None, 0, informational=informational)
    viol = lhs - rhs * (1.0 + slack)
    i = int(np.argmax(viol))
    fails = ks[viol > 0].astype(int).tolist()
    return LineReport(name, not fails, float(viol[i]), int(ks[i]), int(ks.size), fails, informational)


def _rhs(fn: Callable, bc, ks):
    return np.array([fn(bc, int(k)) for k in ks], dtype=float)


def _popov_envelope_applies(bc) -> bool:
    # the closed constant 90 is derived for eta0 = 0.65 / sqrt(M), sqrt(M) = 2L
    return bc.L is not None and abs(bc.eta0 * 2.0 * bc.L - 0.65) <= 1e-9


def check_bound(trace, theorem_id: str, slack: float = REL_SLACK) -> BoundReport:
    """Check every bound line available for ``theorem_id`` at every recorded ``k``.

    Needs the bound constants the runner stores in the trace header, which in
    turn need a known solution.
    """
    if theorem_id not in THEOREM_IDS:
        raise ConfigError(f"unknown theorem id {theorem_id!r}; expected one of {THEOREM_IDS}")
    hb = trace.header.get("bound")
    if hb is None:
        raise MissingSolution("trace carries no bound constants; the problem needs a known solution")
    bc = B.BoundConstants.from_dict(hb)
    if bc.theorem != theorem_id:
        raise ConfigError(f"trace was produced under {bc.theorem!r}, not {theorem_id!r}")
    ks = trace.k
    res2 = trace.residuals**2
    lines = {}
    if theorem_id == "anchored_popov":
        gap2 = trace.column("gap") ** 2
        lines["residual"] = compare_line("residual", ks, res2, _rhs(B.popov_residual, bc, ks), slack)
        lines["main"] = compare_line("main", ks, res2 + 2.0 * bc.L**2 * gap2, _rhs(B.popov_main, bc, ks), slack)
        lines["gap"] = compare_line("gap", ks, gap2, _rhs(B.popov_gap, bc, ks), slack)
        gy = trace.column("gy_diff") ** 2
        # row k stores ||G(y_{k-1}) - G(y_{k-2})||
        j = ks - 1
        m = j >= 0
        lines["gy_diff"] = compare_line("gy_diff", j[m], gy[m], _rhs(B.popov_gy_diff, bc, j[m]), slack,
                                        informational=True)
        if _popov_envelope_applies(bc):
            lines["envelope_90"] = compare_line("envelope_90", ks, res2, _rhs(B.popov_envelope_90, bc, ks), slack)
    elif theorem_id == "split_aeg":
        lines["residual"] = compare_line("residual", ks, res2, _rhs(B.split_residual, bc, ks), slack)
        d = trace.column("res_diff_sq")
        # row i+1 holds ||G_gamma(x_{i+1}) - G_gamma(x_i)||^2
        w = np.where(np.isfinite(d), ks * (ks + 1.0) * d, 0.0)
        partial = np.cumsum(w)
        lines["summability"] = compare_line("summability", ks, partial,
                                            np.full(ks.shape, B.split_aeg_summable(bc)), slack)
    elif theorem_id == "split_popov":
        gap2 = trace.column("gap") ** 2
        lines["residual"] = compare_line("residual", ks, res2, _rhs(B.split_residual, bc, ks), slack)
        lines["gap"] = compare_line("gap", ks, gap2, _rhs(B.split_popov_gap, bc, ks), slack)
    else:
        if bc.L is not None:
            lines["residual_lipschitz"] = compare_line("residual_lipschitz", ks, res2,
                                                       _rhs(B.dr_residual_lipschitz, bc, ks), slack)
        if bc.ustar_dist is not None and bc.res0_sq is not None:
            lines["residual_anchor"] = compare_line("residual_anchor", ks, res2, _rhs(B.dr_residual, bc, ks), slack)
    return BoundReport(theorem_id, lines)
