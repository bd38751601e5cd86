"""Monotone operators exposed through forward and resolvent evaluations.

An :class:`OperatorHandle` bundles an optional single-valued forward map
``x -> T(x)`` with an optional resolvent ``(gamma, x) -> (I + gamma T)^{-1} x``.
Set-valued operators such as normal cones or subdifferentials of nonsmooth
functions carry only the resolvent.  The forward-backward residual

    G_gamma(x) = (x - J_{gamma A}(x - gamma B(x))) / gamma

of the inclusion ``0 in A(x) + B(x)`` is provided by :class:`ResidualMap`.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import (
    DimensionMismatch,
    MissingForward,
    MissingResolvent,
    NonFiniteIterate,
    NonPositiveGamma,
    PreconditionViolation,
)

Forward = Callable[[np.ndarray], np.ndarray]
Resolvent = Callable[[float, np.ndarray], np.ndarray]

OPERATOR_KINDS = ("linear", "rotation", "l1_prox", "box_projection", "affine", "zero", "halfspace")


def as_point(x, dim: Optional[int] = None) -> np.ndarray:
    """Return ``x`` as a finite 1-D float64 array (a copy)."""
    p = np.array(x, dtype=np.float64).reshape(-1)
    if dim is not None and p.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {p.shape[0]}")
    if not np.all(np.isfinite(p)):
        raise NonFiniteIterate("point contains NaN or Inf")
    return p


def _finite(y: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(y)):
        raise NonFiniteIterate(f"{what} produced a non-finite value")
    return y


@dataclass(frozen=True)
class OperatorHandle:
    """A maximally monotone operator on R^dim.

    Parameters
    ----------
    forward : callable, optional
        Single-valued evaluation ``x -> T(x)``.
    resolvent : callable, optional
        ``(gamma, x) -> J_{gamma T}(x)``.
    lipschitz : float, optional
        Lipschitz constant of ``forward``.
    dim : int, optional
        Dimension of the space; ``None`` accepts any dimension.
    """

    forward: Optional[Forward] = None
    resolvent: Optional[Resolvent] = None
    lipschitz: Optional[float] = None
    dim: Optional[int] = None
    name: str = ""
    spec: Optional[dict] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.forward is None and self.resolvent is None:
            raise ValueError("an operator needs a forward map, a resolvent, or both")
        if self.lipschitz is not None and self.lipschitz < 0:
            raise ValueError("Lipschitz constant must be nonnegative")

    @property
    def has_forward(self) -> bool:
        return self.forward is not None

    @property
    def has_resolvent(self) -> bool:
        return self.resolvent is not None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return eval_forward(self, x)

    def resolve(self, gamma: float, x: np.ndarray) -> np.ndarray:
        return eval_resolvent(self, gamma, x)

    def to_json(self) -> dict:
        if self.spec is None:
            raise ValueError(f"operator {self.name!r} was not built from a serializable kind")
        d = dict(self.spec)
        if self.lipschitz is not None:
            d.setdefault("lipschitz", self.lipschitz)
        return d


def _check_dim(op: OperatorHandle, x: np.ndarray):
    if x.ndim != 1:
        raise DimensionMismatch("points are flat vectors")
    if op.dim is not None and x.shape[0] != op.dim:
        raise DimensionMismatch(f"{op.name or 'operator'} acts on R^{op.dim}, got R^{x.shape[0]}")


def eval_forward(op: OperatorHandle, x: np.ndarray) -> np.ndarray:
    """Evaluate ``B(x)``; ``x`` is not modified."""
    if op.forward is None:
        raise MissingForward(f"{op.name or 'operator'} has no forward evaluation")
    x = np.asarray(x, dtype=np.float64)
    _check_dim(op, x)
    return _finite(np.asarray(op.forward(x), dtype=np.float64), f"forward of {op.name or 'operator'}")


def eval_resolvent(op: OperatorHandle, gamma: float, x: np.ndarray) -> np.ndarray:
    """Evaluate ``J_{gamma T}(x)``, the unique ``y`` with ``x in y + gamma T(y)``."""
    if op.resolvent is None:
        raise MissingResolvent(f"{op.name or 'operator'} has no resolvent")
    if not gamma > 0:
        raise NonPositiveGamma(f"resolvent step must be positive, got {gamma}")
    x = np.asarray(x, dtype=np.float64)
    _check_dim(op, x)
    return _finite(np.asarray(op.resolvent(gamma, x), dtype=np.float64), f"resolvent of {op.name or 'operator'}")


# -- evaluation counting ------------------------------------------------------


@dataclass
class EvalCounter:
    forward: int = 0
    resolvent: int = 0

    def snapshot(self) -> tuple:
        return (self.forward, self.resolvent)


def counted(op: OperatorHandle) -> tuple[OperatorHandle, EvalCounter]:
    """Wrap ``op`` so that every forward/resolvent call is tallied.

    Each solver run builds its own wrappers, so counters are never shared.
    """
    counter = EvalCounter()
    fwd = res = None
    if op.forward is not None:
        inner_f = op.forward

        def fwd(x):
            counter.forward += 1
            return inner_f(x)

    if op.resolvent is not None:
        inner_r = op.resolvent

        def res(gamma, x):
            counter.resolvent += 1
            return inner_r(gamma, x)

    wrapped = OperatorHandle(fwd, res, op.lipschitz, op.dim, op.name, op.spec)
    return wrapped, counter


# -- linear resolvents --------------------------------------------------------


class _LinearSolveCache:
    """LU factorizations of ``I + gamma M``, one per gamma, built on first use."""

    def __init__(self, M: np.ndarray):
        self.M = M
        self._lu = {}
        self._lock = threading.Lock()

    def solve(self, gamma: float, rhs: np.ndarray) -> np.ndarray:
        lu = self._lu.get(gamma)
        if lu is None:
            with self._lock:
                lu = self._lu.get(gamma)
                if lu is None:
                    n = self.M.shape[0]
                    lu = lu_factor(np.eye(n) + gamma * self.M)
                    self._lu[gamma] = lu
        return lu_solve(lu, rhs)


def _as_matrix(M) -> np.ndarray:
    M = np.atleast_2d(np.array(M, dtype=np.float64))
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"operator matrix must be square, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFiniteIterate("operator matrix contains NaN or Inf")
    return M


def monotonicity_margin(M: np.ndarray) -> float:
    """Smallest eigenvalue of the symmetric part of ``M``."""
    M = _as_matrix(M)
    return float(np.linalg.eigvalsh(0.5 * (M + M.T)).min())


def zero(dim: Optional[int] = None) -> OperatorHandle:
    return OperatorHandle(
        forward=lambda x: np.zeros_like(x),
        resolvent=lambda gamma, x: np.array(x, dtype=np.float64),
        lipschitz=0.0,
        dim=dim,
        name="zero",
        spec={"kind": "zero", "dim": dim},
    )


def affine(M, q=None, lipschitz: Optional[float] = None) -> OperatorHandle:
    """``T(x) = M x + q``; monotone when the symmetric part of ``M`` is PSD."""
    M = _as_matrix(M)
    n = M.shape[0]
    q = np.zeros(n) if q is None else as_point(q, n)
    cache = _LinearSolveCache(M)
    L = float(np.linalg.norm(M, 2)) if lipschitz is None else float(lipschitz)
    is_linear = not np.any(q)

    def forward(x):
        return M @ x + q

    def resolvent(gamma, x):
        return cache.solve(gamma, x - gamma * q)

    spec = {"kind": "linear", "matrix": M.tolist()} if is_linear else {
        "kind": "affine", "matrix": M.tolist(), "offset": q.tolist()}
    return OperatorHandle(forward, resolvent, L, n, spec["kind"], spec)


def linear(M, lipschitz: Optional[float] = None) -> OperatorHandle:
    return affine(M, None, lipschitz)


def rotation_matrix(dim: int, scale: float = 1.0) -> np.ndarray:
    """Block-diagonal skew matrix with 2x2 blocks ``scale * [[0, 1], [-1, 0]]``."""
    if dim <= 0 or dim % 2:
        raise ValueError(f"rotation needs a positive even dimension, got {dim}")
    if not scale > 0:
        raise ValueError("rotation scale must be positive")
    S = np.zeros((dim, dim))
    for i in range(0, dim, 2):
        S[i, i + 1] = scale
        S[i + 1, i] = -scale
    return S


def rotation(dim: int = 2, scale: float = 1.0) -> OperatorHandle:
    op = affine(rotation_matrix(dim, scale), lipschitz=scale)
    spec = {"kind": "rotation", "dim": dim, "scale": scale}
    return OperatorHandle(op.forward, op.resolvent, scale, dim, "rotation", spec)


def soft_threshold(x: np.ndarray, t) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def l1_prox(lam: float = 1.0, dim: Optional[int] = None) -> OperatorHandle:
    """Subdifferential of ``lam * ||x||_1``; resolvent is soft-thresholding."""
    if lam < 0:
        raise ValueError("l1 weight must be nonnegative")
    return OperatorHandle(
        resolvent=lambda gamma, x: soft_threshold(x, gamma * lam),
        dim=dim,
        name="l1_prox",
        spec={"kind": "l1_prox", "lam": lam, "dim": dim},
    )


def box_projection(lower, upper) -> OperatorHandle:
    """Normal cone of the box ``[lower, upper]``; resolvent is the clamp."""
    lo = np.array(lower, dtype=np.float64).reshape(-1)
    hi = np.array(upper, dtype=np.float64).reshape(-1)
    if lo.shape != hi.shape or np.any(lo > hi):
        raise ValueError("box bounds must have equal shapes and lower <= upper")
    return OperatorHandle(
        resolvent=lambda gamma, x: np.clip(x, lo, hi),
        dim=lo.shape[0],
        name="box_projection",
        spec={"kind": "box_projection", "lower": lo.tolist(), "upper": hi.tolist()},
    )


def halfspace(a, b: float) -> OperatorHandle:
    """Normal cone of ``{x : <a, x> <= b}``."""
    a = as_point(a)
    nrm2 = float(a @ a)
    if nrm2 == 0:
        raise ValueError("halfspace normal must be nonzero")

    def proj(gamma, x):
        excess = a @ x - b
        return x - (max(excess, 0.0) / nrm2) * a

    return OperatorHandle(resolvent=proj, dim=a.shape[0], name="halfspace",
                          spec={"kind": "halfspace", "normal": a.tolist(), "offset": float(b)})


def operator_from_json(d: dict) -> OperatorHandle:
    """Build an operator from its JSON description (``kind`` tag plus parameters)."""
    kind = d.get("kind")
    lip = d.get("lipschitz")
    if kind == "zero":
        return zero(d.get("dim"))
    if kind == "linear":
        return linear(d["matrix"], lip)
    if kind == "affine":
        return affine(d["matrix"], d.get("offset"), lip)
    if kind == "rotation":
        return rotation(int(d.get("dim", 2)), float(d.get("scale", 1.0)))
    if kind == "l1_prox":
        return l1_prox(float(d.get("lam", 1.0)), d.get("dim"))
    if kind == "box_projection":
        return box_projection(d["lower"], d["upper"])
    if kind == "halfspace":
        return halfspace(d["normal"], d["offset"])
    raise ValueError(f"unknown operator kind {kind!r}; expected one of {OPERATOR_KINDS}")


# -- forward-backward residual ------------------------------------------------


class ResidualMap:
    """Forward-backward residual ``G_gamma`` of ``0 in A(x) + B(x)``.

    ``A`` must expose a resolvent and ``B`` a forward map.  ``G_gamma`` vanishes
    exactly on the zeros of ``A + B``.
    """

    def __init__(self, opA: OperatorHandle, opB: OperatorHandle, gamma: float):
        if not opA.has_resolvent:
            raise MissingResolvent("residual map needs the resolvent of A")
        if not opB.has_forward:
            raise MissingForward("residual map needs a single-valued, evaluable B")
        if not gamma > 0:
            raise NonPositiveGamma(f"gamma must be positive, got {gamma}")
        self.opA = opA
        self.opB = opB
        self.gamma = float(gamma)

    @property
    def lipschitz(self) -> Optional[float]:
        """``(1 + gamma L) / gamma`` when ``B`` has a known constant ``L``."""
        if self.opB.lipschitz is None:
            return None
        return (1.0 + self.gamma * self.opB.lipschitz) / self.gamma

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return residual(self, x)


def residual(rmap: ResidualMap, x: np.ndarray) -> np.ndarray:
    g = rmap.gamma
    bx = eval_forward(rmap.opB, x)
    return (x - eval_resolvent(rmap.opA, g, x - g * bx)) / g


def residual_no_forward(rmap: ResidualMap, x: np.ndarray, u: np.ndarray, check: bool = False) -> np.ndarray:
    """``G_gamma(x)`` from a pair with ``x = J_{gamma B}(u)``, without evaluating ``B``.

    Uses ``gamma B(x) = u - x``.  With ``check=True`` the pairing is verified to
    1e-8 and :class:`PreconditionViolation` is raised otherwise.
    """
    g = rmap.gamma
    if check:
        if rmap.opB.has_resolvent:
            ref = eval_resolvent(rmap.opB, g, u)
            gap = np.linalg.norm(ref - x)
        else:
            gap = np.linalg.norm(x + g * eval_forward(rmap.opB, x) - u)
        if gap > 1e-8 * max(1.0, np.linalg.norm(u)):
            raise PreconditionViolation(f"x is not J_gamma_B(u): mismatch {gap:.3e}")
    return (x - eval_resolvent(rmap.opA, g, 2.0 * x - u)) / g
