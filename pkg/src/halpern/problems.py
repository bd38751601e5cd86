"""Test problems with certified solutions.

Every solution is computed by a direct oracle that shares no code with the
solvers: a linear solve, an enumeration of box faces, or an enumeration of
sign patterns.  Instances serialize to JSON and back.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from .errors import DimensionMismatch, NotMonotone, PreconditionViolation
from .operators import (
    OperatorHandle,
    ResidualMap,
    affine,
    as_point,
    box_projection,
    eval_forward,
    l1_prox,
    monotonicity_margin,
    operator_from_json,
    residual,
    rotation,
    rotation_matrix,
)

ENUM_DIM_CAP = 6
SOLVE_DIM_CAP = 200
CERT_TOL = 1e-10


@dataclass
class ProblemInstance:
    """Either ``0 = G(x)`` (``kind='equation'``) or ``0 in A(x) + B(x)``
    (``kind='inclusion'``).  Minimax and ADMM instances carry their data in
    ``payload``.
    """

    id: str
    kind: str
    dim: int
    x0: np.ndarray
    G: Optional[OperatorHandle] = None
    A: Optional[OperatorHandle] = None
    B: Optional[OperatorHandle] = None
    L: Optional[float] = None
    gamma: Optional[float] = None
    known_solution: Optional[np.ndarray] = None
    certification: Optional[str] = None
    seed: Optional[int] = None
    description: str = ""
    payload: Any = None

    def residual_at(self, x) -> np.ndarray:
        """``G(x)`` for equations, ``G_gamma(x)`` for inclusions."""
        x = as_point(x, self.dim)
        if self.kind == "equation":
            return eval_forward(self.G, x)
        if self.kind == "inclusion":
            return residual(ResidualMap(self.A, self.B, self.gamma), x)
        return self.payload.residual_at(x)

    def certify(self, tol: float = CERT_TOL) -> float:
        """Residual norm at the known solution; raises if above ``tol``."""
        if self.known_solution is None:
            raise PreconditionViolation(f"{self.id} has no known solution")
        res = float(np.linalg.norm(self.residual_at(self.known_solution)))
        if res > tol:
            raise PreconditionViolation(f"{self.id}: residual {res:.3e} at the recorded solution")
        return res

    # -- JSON ---------------------------------------------------------------

    def to_json(self) -> dict:
        d = {
            "id": self.id,
            "kind": self.kind,
            "dim": self.dim,
            "x0": self.x0.tolist(),
            "L": self.L,
            "gamma": self.gamma,
            "known_solution": None if self.known_solution is None else self.known_solution.tolist(),
            "certification": self.certification,
            "seed": self.seed,
            "description": self.description,
        }
        if self.kind in ("equation", "inclusion"):
            d["operators"] = {n: op.to_json() for n, op in (("G", self.G), ("A", self.A), ("B", self.B))
                              if op is not None}
        else:
            d["kind"] = self.payload.kind
            d["data"] = self.payload.to_json()
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, d: dict) -> "ProblemInstance":
        kind = d["kind"]
        common = dict(
            id=d["id"],
            dim=int(d["dim"]),
            x0=as_point(d["x0"]),
            L=d.get("L"),
            gamma=d.get("gamma"),
            known_solution=None if d.get("known_solution") is None else as_point(d["known_solution"]),
            certification=d.get("certification"),
            seed=d.get("seed"),
            description=d.get("description", ""),
        )
        if kind in ("equation", "inclusion"):
            ops = {n: operator_from_json(o) for n, o in d.get("operators", {}).items()}
            return cls(kind=kind, **ops, **common)
        from .applications import payload_from_json

        payload = payload_from_json(kind, d["data"])
        return cls(kind=payload.family, payload=payload, **payload.operators(), **common)

    @classmethod
    def loads(cls, s: str) -> "ProblemInstance":
        return cls.from_json(json.loads(s))


# -- oracles ------------------------------------------------------------------


def _check_dim(n: int, cap: int, what: str):
    if n > cap:
        raise DimensionMismatch(f"{what} oracle is limited to dimension {cap}, got {n}")


def _require_monotone(M: np.ndarray):
    lam = monotonicity_margin(M)
    if lam < -1e-10:
        raise NotMonotone(f"symmetric part has eigenvalue {lam:.3e} < 0")


def linear_solution(M: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Solve ``M x + q = 0``; least squares when singular, verified to 1e-10."""
    _check_dim(M.shape[0], SOLVE_DIM_CAP, "linear-solve")
    try:
        x = np.linalg.solve(M, -q)
    except np.linalg.LinAlgError:
        x = np.linalg.lstsq(M, -q, rcond=None)[0]
    if np.linalg.norm(M @ x + q) > CERT_TOL * max(1.0, np.linalg.norm(q)):
        raise PreconditionViolation("M x + q = 0 has no solution")
    return x


def box_active_set(lower, upper, M, q, tol: float = 1e-11) -> np.ndarray:
    """Solve the box VI ``0 in M x + q + N_[lower, upper](x)`` by trying every face.

    Each coordinate is pinned at its lower bound, pinned at its upper bound,
    or free.  On the free set ``(M x + q)_F = 0``; pinned coordinates need the
    matching sign of ``(M x + q)_i``.
    """
    lo, hi = np.asarray(lower, float), np.asarray(upper, float)
    n = lo.shape[0]
    _check_dim(n, ENUM_DIM_CAP, "active-set")
    for pattern in itertools.product((0, -1, 1), repeat=n):
        pat = np.array(pattern)
        x = np.where(pat == -1, lo, np.where(pat == 1, hi, 0.0))
        F = np.flatnonzero(pat == 0)
        if F.size:
            fixed = np.flatnonzero(pat != 0)
            rhs = -(q[F] + M[np.ix_(F, fixed)] @ x[fixed])
            sub = M[np.ix_(F, F)]
            try:
                xF = np.linalg.solve(sub, rhs)
            except np.linalg.LinAlgError:
                xF = np.linalg.lstsq(sub, rhs, rcond=None)[0]
                if np.linalg.norm(sub @ xF - rhs) > tol:
                    continue
            x[F] = xF
        g = M @ x + q
        if np.any(x < lo - tol) or np.any(x > hi + tol):
            continue
        if np.any(np.abs(g[pat == 0]) > 1e-9):
            continue
        at_lo, at_hi = pat == -1, pat == 1
        if np.any(g[at_lo] < -tol) or np.any(g[at_hi] > tol):
            continue
        # at a degenerate box (lower == upper) any sign is fine, handled above
        return np.clip(x, lo, hi)
    raise PreconditionViolation("no face of the box yields a solution")


def l1_sign_enumeration(lam: float, M, q, tol: float = 1e-11) -> np.ndarray:
    """Solve ``0 in M x + q + lam d||x||_1`` by trying every sign pattern."""
    n = q.shape[0]
    _check_dim(n, ENUM_DIM_CAP, "subgradient enumeration")
    for pattern in itertools.product((0, 1, -1), repeat=n):
        s = np.array(pattern, dtype=float)
        S = np.flatnonzero(s != 0)
        x = np.zeros(n)
        if S.size:
            sub = M[np.ix_(S, S)]
            rhs = -(q[S] + lam * s[S])
            try:
                xS = np.linalg.solve(sub, rhs)
            except np.linalg.LinAlgError:
                xS = np.linalg.lstsq(sub, rhs, rcond=None)[0]
                if np.linalg.norm(sub @ xS - rhs) > tol:
                    continue
            if np.any(xS * s[S] <= 0):
                continue
            x[S] = xS
        g = M @ x + q
        Z = s == 0
        if np.any(np.abs(g[Z]) > lam + tol):
            continue
        return x
    raise PreconditionViolation("no sign pattern yields a solution")


# -- generators ---------------------------------------------------------------


def _x0(x0, n, default):
    return as_point(default if x0 is None else x0, n)


def make_rotation(dim: int = 2, scale: float = 1.0, x0=None, id: Optional[str] = None) -> ProblemInstance:
    """Skew-symmetric ``G(x) = S x`` with 2x2 rotation blocks; ``x* = 0``."""
    G = rotation(dim, scale)
    e = np.zeros(dim)
    e[0] = 1.0
    return ProblemInstance(
        id=id or f"rotation-{dim}" + ("" if scale == 1.0 else f"-s{scale:g}"),
        kind="equation", dim=dim, x0=_x0(x0, dim, e), G=G, L=float(scale),
        known_solution=np.zeros(dim), certification="analytic",
        description=f"block rotation, dim {dim}, scale {scale:g}",
    )


def make_affine_monotone(M, q, x0=None, id: Optional[str] = None, seed: Optional[int] = None) -> ProblemInstance:
    """``G(x) = M x + q`` with PSD symmetric part; ``x*`` by linear solve."""
    M = np.atleast_2d(np.array(M, dtype=float))
    n = M.shape[0]
    q = as_point(q, n)
    _require_monotone(M)
    xs = linear_solution(M, q)
    G = affine(M, q)
    return ProblemInstance(
        id=id or f"affine-{n}", kind="equation", dim=n, x0=_x0(x0, n, np.ones(n)), G=G,
        L=G.lipschitz, known_solution=xs, certification="linear-solve", seed=seed,
        description="affine monotone equation",
    )


def random_skew_shift(dim: int, shift: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((dim, dim))
    S = C - C.T
    S /= np.linalg.norm(S, 2)
    return S + shift * np.eye(dim)


def make_random_affine(dim: int = 4, shift: float = 0.1, seed: int = 0, id: Optional[str] = None) -> ProblemInstance:
    """Skew matrix of unit norm plus ``shift * I``, seeded offset."""
    M = random_skew_shift(dim, shift, seed)
    rng = np.random.default_rng(seed + 1)
    q = rng.standard_normal(dim)
    return make_affine_monotone(M, q, x0=np.zeros(dim), id=id or f"affine-skew-{dim}-s{seed}", seed=seed)


def make_box_inclusion(lower, upper, M, q=None, gamma: float = 1.0, x0=None,
                       id: Optional[str] = None) -> ProblemInstance:
    """``0 in N_box(x) + M x + q``; ``x*`` by active-set enumeration."""
    M = np.atleast_2d(np.array(M, dtype=float))
    n = M.shape[0]
    q = np.zeros(n) if q is None else as_point(q, n)
    _require_monotone(M)
    A = box_projection(lower, upper)
    if A.dim != n:
        raise DimensionMismatch("box and operator dimensions differ")
    B = affine(M, q)
    xs = box_active_set(lower, upper, M, q)
    return ProblemInstance(
        id=id or f"box-{n}", kind="inclusion", dim=n, x0=_x0(x0, n, np.zeros(n)), A=A, B=B,
        L=B.lipschitz, gamma=float(gamma), known_solution=xs, certification="active-set",
        description="box-constrained affine variational inequality",
    )


def make_l1_quadratic(lam: float, M, q, gamma: float = 1.0, x0=None, id: Optional[str] = None) -> ProblemInstance:
    """``0 in lam d||x||_1 + M x + q``; ``x*`` by sign-pattern enumeration."""
    M = np.atleast_2d(np.array(M, dtype=float))
    n = M.shape[0]
    q = as_point(q, n)
    _require_monotone(M)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    xs = linear_solution(M, q) if lam == 0 else l1_sign_enumeration(lam, M, q)
    B = affine(M, q)
    return ProblemInstance(
        id=id or f"l1-quadratic-{n}", kind="inclusion", dim=n, x0=_x0(x0, n, np.zeros(n)),
        A=l1_prox(lam, n), B=B, L=B.lipschitz, gamma=float(gamma), known_solution=xs,
        certification="linear-solve" if lam == 0 else "subgradient-enumeration",
        description="l1-regularized affine inclusion",
    )


# -- registry -----------------------------------------------------------------


def _box2():
    # rotation-matrix B of norm 1, box [-1, 1]^2; the solution sits on a face
    return make_box_inclusion([-1.0, -1.0], [1.0, 1.0], rotation_matrix(2), q=[1.5, -0.5],
                              gamma=1.0, x0=[0.5, 0.5], id="box-2")


def _box4():
    M = random_skew_shift(4, 0.05, seed=7)
    q = np.array([1.0, -2.0, 0.5, 1.5])
    return make_box_inclusion(-np.ones(4), np.ones(4), M, q=q, gamma=1.0, x0=np.zeros(4), id="box-4")


def _l1q3():
    rng = np.random.default_rng(11)
    C = rng.standard_normal((3, 3))
    M = C.T @ C
    skew = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 1.0], [0.0, -1.0, 0.0]])
    M = M / np.linalg.norm(M, 2) + 0.3 * skew
    q = np.array([-1.0, 0.3, 0.8])
    return make_l1_quadratic(0.2, M, q, gamma=1.0, x0=np.ones(3), id="l1-quadratic-3")


def from_payload(payload, id: str, x0, known_solution=None, certification=None, L=None,
                 description: str = "") -> ProblemInstance:
    """Wrap a minimax or ADMM payload; minimax payloads also expose ``G``."""
    return ProblemInstance(id=id, kind=payload.family, dim=payload.dim, x0=as_point(x0), L=L,
                           gamma=getattr(payload, "gamma", None),
                           known_solution=None if known_solution is None else as_point(known_solution),
                           certification=certification, description=description, payload=payload,
                           **payload.operators())


def _minimax_scalar():
    from .applications import quadratic_minimax

    mm = quadratic_minimax([[0.0]], [[1.0]], [[0.0]])
    return from_payload(mm, "minimax-scalar-bilinear", [1.0, 1.0], [0.0, 0.0], "analytic", L=mm.L_lip,
                        description="L(z, w) = z w")


def _minimax_quad():
    from .applications import quadratic_minimax, quadratic_saddle

    mm = quadratic_minimax([[1.0]], [[1.0]], [[1.0]])
    return from_payload(mm, "minimax-quad", [1.0, -2.0], quadratic_saddle(mm), "linear-solve", L=mm.L_lip,
                        description="L(z, w) = z^2/2 + z w - w^2/2")


def _minimax_l1_box():
    from .applications import BilinearMinimax

    bm = BilinearMinimax(K=[[1.0]], f=l1_prox(1.0, 1), g=box_projection([-1.0], [1.0]))
    return from_payload(bm, "minimax-l1-box", [2.0, 3.0], [0.0, 0.0], "analytic", L=1.0,
                        description="min_z max_{|w|<=1} |z| + z w")


def _admm_quadratic():
    from .applications import AdmmProblem, QuadraticTerm, kkt_solution

    prob = AdmmProblem(P=np.eye(2), Q=np.eye(2), r=[2.0, 2.0], f=QuadraticTerm(np.eye(2)),
                       g=QuadraticTerm(np.eye(2)), gamma=1.0)
    return from_payload(prob, "admm-quadratic", np.zeros(prob.dim), kkt_solution(prob), "KKT-solve",
                        description="min |z|^2/2 + |w|^2/2 s.t. z + w = (2, 2); stacked point (z, w, x)")


REGISTRY: dict[str, Callable[[], ProblemInstance]] = {
    "rotation-2": lambda: make_rotation(2, 1.0, id="rotation-2"),
    "rotation-4-scaled": lambda: make_rotation(4, 2.5, x0=[1.0, -1.0, 0.5, 2.0], id="rotation-4-scaled"),
    "affine-skew-4": lambda: make_random_affine(4, 0.1, seed=3, id="affine-skew-4"),
    "box-2": _box2,
    "box-4": _box4,
    "l1-quadratic-3": _l1q3,
    "minimax-scalar-bilinear": _minimax_scalar,
    "minimax-quad": _minimax_quad,
    "minimax-l1-box": _minimax_l1_box,
    "admm-quadratic": _admm_quadratic,
}

EQUATION_ZOO = ("rotation-2", "rotation-4-scaled", "affine-skew-4")
INCLUSION_ZOO = ("box-2", "box-4", "l1-quadratic-3")


def register(name: str, factory: Callable[[], ProblemInstance]):
    REGISTRY[name] = factory


def get_problem(name: str) -> ProblemInstance:
    try:
        return REGISTRY[name]()
    except KeyError:
        from .errors import ConfigError

        raise ConfigError(f"unknown problem {name!r}; known: {sorted(REGISTRY)}") from None


def list_problems() -> list[dict]:
    out = []
    for name in sorted(REGISTRY):
        p = REGISTRY[name]()
        out.append({"id": name, "kind": p.kind, "dim": p.dim, "description": p.description})
    return out
