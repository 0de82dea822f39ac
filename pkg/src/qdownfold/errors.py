"""Exception types raised across the package."""

from __future__ import annotations


class ParseError(ValueError):
    """Malformed FCIDUMP input. ``lineno`` is 1-based when known."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class InconsistentIntegral(ParseError):
    """Two entries map to the same symmetry-equivalent slot with different values."""


class FcidumpIndexError(ParseError, IndexError):
    """Orbital index outside [1, NORB]."""


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


class NonHermitianInput(ValueError):
    pass


class SymmetryError(ValueError):
    """A symmetry sector was requested for an operator that breaks the symmetry."""


class RangeError(ValueError):
    pass


class InsufficientShots(ValueError):
    pass


class DegenerateSubspace(ValueError):
    """Every overlap eigenvalue fell below the cutoff."""


class NotAmplifiable(ValueError):
    """Circuit has no two-qubit gates to fold."""


class FitError(ValueError):
    pass


class ExternalityError(ValueError):
    """An excitation supplied as external touches active orbitals only."""


class ConfigError(ValueError):
    pass


class SolverError(RuntimeError):
    """Optimizer failure that survived a perturbed restart. ``trace`` holds progress so far."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace
