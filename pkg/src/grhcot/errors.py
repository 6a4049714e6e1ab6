"""Shared exception types.

Domain violations raise ValueError, I/O problems raise OSError; only the
budget condition needs its own type so callers can map it to a distinct
exit code.
"""

from __future__ import annotations


class BudgetExceededError(RuntimeError):
    """A series or quadrature hit its term budget before meeting rel_tol."""
