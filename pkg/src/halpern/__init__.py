"""Halpern-type accelerated splitting methods for monotone inclusions."""

from . import applications, errors, harness, operators, problems, schedules, solvers
from .errors import *  # noqa: F401,F403

__version__ = "0.1.0"
