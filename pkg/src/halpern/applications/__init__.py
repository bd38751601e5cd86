"""Saddle-point and ADMM schemes built on the anchored solvers."""

from ..errors import ConfigError
from .admm import (
    AdmmProblem,
    L1Term,
    QuadraticTerm,
    admm_from_json,
    dual_dr_problem,
    dual_operators,
    kkt_solution,
    solve_admm_accel,
    solve_admm_vanilla,
)
from .minimax import (
    BilinearMinimax,
    SmoothMinimax,
    bilinear_from_json,
    h_norm,
    quadratic_minimax,
    quadratic_saddle,
    smooth_from_json,
    solve_minimax_bilinear,
    solve_minimax_smooth,
)

_LOADERS = {
    "minimax_smooth": smooth_from_json,
    "minimax_bilinear": bilinear_from_json,
    "admm": admm_from_json,
}


def payload_from_json(kind: str, data: dict):
    try:
        loader = _LOADERS[kind]
    except KeyError:
        raise ConfigError(f"unknown problem kind {kind!r}") from None
    return loader(data)


__all__ = [
    "AdmmProblem", "BilinearMinimax", "L1Term", "QuadraticTerm", "SmoothMinimax",
    "admm_from_json", "bilinear_from_json", "dual_dr_problem", "dual_operators", "h_norm",
    "kkt_solution", "payload_from_json", "quadratic_minimax", "quadratic_saddle", "smooth_from_json",
    "solve_admm_accel", "solve_admm_vanilla", "solve_minimax_bilinear", "solve_minimax_smooth",
]
