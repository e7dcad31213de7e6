"""Exception types shared across the package."""
from __future__ import annotations


class ConfigError(ValueError):
    """Invalid configuration or mismatched shapes; ``key`` names the offending setting."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class NumericAbort(ArithmeticError):
    """A non-finite value appeared during stepping; ``last_good`` is the state one step earlier."""

    def __init__(self, message: str, step: int | None = None, site: int | None = None, last_good=None):
        super().__init__(message)
        self.step = step
        self.site = site
        self.last_good = last_good


class SequenceError(RuntimeError):
    """A step of an operator sequence failed; ``index`` is its written position."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index
