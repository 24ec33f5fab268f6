"""Exception types shared across the package."""

from __future__ import annotations


class UvsdmaError(Exception):
    """Base class for all errors raised by uvsdma."""


class ContractError(UvsdmaError, ValueError):
    """Inputs violate a documented precondition (shape, sign, range)."""


class DomainError(ContractError):
    """A physical quantity is outside its admissible domain."""


class SingularPatternError(ContractError):
    """The pilot Gram matrix X X^T is singular."""


class DegenerateProblemError(ContractError):
    """Two hypotheses cannot be separated (identical intensities, zero spread)."""


class InconsistencyError(ContractError):
    """A matrix claimed to be balanced has index-dependent statistics."""


class NumericError(UvsdmaError, ArithmeticError):
    """A closed form produced a non-finite intermediate value."""

    def __init__(self, message, **inputs):
        super().__init__(message)
        self.inputs = inputs


class UnsupportedError(UvsdmaError, NotImplementedError):
    """The request is valid but too large for exact evaluation."""


class ConfigError(UvsdmaError):
    """A configuration file is missing, malformed or fails schema validation."""

    def __init__(self, message, path: str = "", line: int | None = None):
        where = path or "$"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line
