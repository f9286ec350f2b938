from __future__ import annotations

from typing import Optional


class AndersonKitError(Exception):
    """Base class for every error raised by andersonkit."""


class ConfigError(AndersonKitError, ValueError):
    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key


class MatrixMarketError(AndersonKitError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None) -> None:
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


class DimensionMismatchError(AndersonKitError, ValueError):
    pass


class PreconditionerError(AndersonKitError, ArithmeticError):
    def __init__(self, message: str, row: Optional[int] = None) -> None:
        suffix = f" (row {row})" if row is not None else ""
        super().__init__(message + suffix)
        self.row = row


class ZeroPivotError(PreconditionerError):
    pass


class SolverBreakdown(AndersonKitError, RuntimeError):
    pass


class StagnationError(AndersonKitError, ValueError):
    """A zero step or zero residual norm where a positive one is required."""
