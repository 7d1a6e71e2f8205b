"""Exception types shared across the package."""
from __future__ import annotations


class DegenerateSpanError(ValueError):
    """Two vectors do not span a plane (parallel, anti-parallel, or zero)."""


class UnderpoweredCheckError(RuntimeError):
    """A statistical check cannot reach its precision target at the sample cap.

    Raised instead of returning a fail verdict, so that "not enough data"
    is never conflated with "the property is false".
    """


class BudgetExceededError(RuntimeError):
    """A schedule asks for more iterations than the configured budget allows."""


class PsgdDivergenceError(RuntimeError):
    """Projected SGD hit a non-finite or zero-norm update."""

    def __init__(self, step: int, detail: str):
        self.step = step
        super().__init__(f"psgd aborted at step {step}: {detail}")


class ConfigError(ValueError):
    """An experiment config file is malformed or inconsistent."""
