"""Exception hierarchy shared by the solver, fluxes and command-line tools."""

from __future__ import annotations


class ESDGSEMError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(ESDGSEMError, ValueError):
    """Invalid parameter or run configuration."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.reason = message
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ContractViolation(ESDGSEMError, ValueError):
    """A caller broke a documented precondition (shape, missing argument)."""


class DomainError(ESDGSEMError, ValueError):
    """A state lies outside the admissible set of its system."""


class AdmissibilityError(ESDGSEMError):
    """An inadmissible degree of freedom was produced or encountered.

    ``location`` is a ``(cell, node)`` pair when known.
    """

    def __init__(self, message: str, location: tuple[int, int] | None = None):
        self.location = location
        if location is not None:
            message = f"{message} at cell {location[0]}, node {location[1]}"
        super().__init__(message)


class LimiterFailure(ESDGSEMError):
    """The limiter precondition (admissible cell average) does not hold."""

    def __init__(self, message: str, cell: int | None = None):
        self.cell = cell
        if cell is not None:
            message = f"{message} in cell {cell}"
        super().__init__(message)
