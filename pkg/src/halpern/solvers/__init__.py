"""Halpern-type accelerated schemes, their classical baselines, and the run loop."""

from .accel_dr import AccelDR, AccelDRConceptual
from .anchored_popov import AnchoredPopov, AnchoredPopovReflected
from .base import Context, IterationTrace, RunConfig, Scheme, SolverState
from .baselines import AnchoredEG, VanillaDR, VanillaEG, VanillaPopov
from .bounds import BoundConstants, c_star, primary_rhs
from .common import LyapunovCoefficients, coefficients
from .runner import ACCELERATED, SCHEMES, get_scheme, iterate, lyapunov_value, prepare, run
from .split_aeg import SplitAEG, SplitAEGResolventOnly
from .split_popov import SplitPopov, SplitPopovDR

__all__ = [
    "ACCELERATED", "SCHEMES", "AccelDR", "AccelDRConceptual", "AnchoredEG", "AnchoredPopov",
    "AnchoredPopovReflected", "BoundConstants", "Context", "IterationTrace", "LyapunovCoefficients",
    "RunConfig", "Scheme", "SolverState", "SplitAEG", "SplitAEGResolventOnly", "SplitPopov",
    "SplitPopovDR", "VanillaDR", "VanillaEG", "VanillaPopov", "c_star", "coefficients",
    "get_scheme", "iterate", "lyapunov_value", "prepare", "primary_rhs", "run",
]
