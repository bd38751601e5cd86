"""Experiment runner, trace files, rate fits, bound checks and the CLI."""

from .bounds import REL_SLACK, BoundReport, LineReport, check_bound, compare_line
from .experiment import (
    APPLICATION_SCHEMES,
    compare,
    compare_rows,
    config_from_echo,
    load_config,
    make_run_config,
    replay_lyapunov,
    resolve_problem,
    run_experiment,
    run_grid,
    validate_config,
)
from .rates import DEFAULT_WINDOW, RateFit, fit_arrays, fit_rate
from .trace_io import body_text, read_trace, write_trace

__all__ = [
    "APPLICATION_SCHEMES", "BoundReport", "DEFAULT_WINDOW", "LineReport", "REL_SLACK", "RateFit",
    "body_text", "check_bound", "compare", "compare_line", "compare_rows", "config_from_echo",
    "fit_arrays", "fit_rate", "load_config", "make_run_config", "read_trace", "replay_lyapunov",
    "resolve_problem", "run_experiment", "run_grid", "validate_config", "write_trace",
]
