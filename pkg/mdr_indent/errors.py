"""Exception hierarchy shared by the model, estimation and I/O layers."""
from __future__ import annotations

from typing import Any, Dict, List, Optional, Sequence


class MdrIndentError(Exception):
    """Base class for every error raised by mdr_indent."""


class ModelDomainError(MdrIndentError, ValueError):
    """Input outside the physical domain of a model (negative depth, non-positive modulus, ...)."""


class InsufficientDataError(MdrIndentError):
    """Too few usable samples to fit a model."""

    def __init__(self, message: str, n_available: int = 0) -> None:
        super().__init__(message)
        self.n_available = n_available


class NoSurfaceFoundError(MdrIndentError):
    """Surface localisation found no admissible surface height."""


class FitFailedError(MdrIndentError):
    """Every start of a multi-start fit failed; `diagnostics` holds one entry per start."""

    def __init__(self, message: str, diagnostics: Optional[List[Dict[str, Any]]] = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or []

    def __str__(self) -> str:
        base = super().__str__()
        if not self.diagnostics:
            return base
        lines = [base]
        for entry in self.diagnostics:
            lines.append(f"  start {entry.get('start')}: {entry.get('reason')}")
        return "\n".join(lines)


class DatasetFormatError(MdrIndentError):
    """A dataset, manifest or table file does not follow its format."""

    def __init__(
        self,
        message: str,
        *,
        path: Optional[str] = None,
        row: Optional[int] = None,
        column: Optional[str] = None,
        expected: Optional[Sequence[str]] = None,
        actual: Optional[Sequence[str]] = None,
    ) -> None:
        super().__init__(message)
        self.path = path
        self.row = row
        self.column = column
        self.expected = list(expected) if expected is not None else None
        self.actual = list(actual) if actual is not None else None


class ConfigError(MdrIndentError):
    """Run configuration failed validation; `violations` lists every problem found."""

    def __init__(self, violations: Sequence[str]) -> None:
        self.violations = list(violations)
        super().__init__("invalid configuration:\n" + "\n".join(f"  {v}" for v in self.violations))
