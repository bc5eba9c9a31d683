"""Exception hierarchy."""

from __future__ import annotations


class GssError(Exception):
    """Base class for errors raised by this package."""


class LayoutError(GssError, ValueError):
    """Unknown, duplicated or inconsistent subsystem labels."""


class DimensionMismatchError(GssError, ValueError):
    """Operator or state dimensions do not agree with the layout."""


class NotHermitianError(GssError, ValueError):
    def __init__(self, max_asymmetry: float, tol: float):
        self.max_asymmetry = float(max_asymmetry)
        self.tol = float(tol)
        super().__init__(
            f"matrix is not Hermitian: max |H - H^dagger| = {self.max_asymmetry:.3e} > {tol:.1e}"
        )


class InvalidStateError(GssError, ValueError):
    """A vector or matrix violates the quantum-state invariants."""


class NotUnitaryError(GssError, ValueError):
    pass


class NotSeparableError(GssError, ValueError):
    """A candidate state could not be certified separable."""


class DecompositionUnavailableError(GssError, ValueError):
    """The requested player-wise twisting decomposition does not exist for a spec."""


class NotGssError(GssError, ValueError):
    """An operation that requires a verified GSS state was given something else."""


class StateFileError(GssError, ValueError):
    """A state file is malformed, truncated or inconsistent with its header."""


class ConfigError(GssError, ValueError):
    """A scenario configuration failed validation."""
