"""Exception types shared across the package.

Precondition violations raise plain ``ValueError`` (or a subclass); runtime
numerical failures raise ``NumericalError`` subclasses so the CLI can map
them to distinct exit codes.
"""


class ConfigError(ValueError):
    """Invalid configuration, dataset, or argument combination."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to reach its accuracy or stability goal."""


class QuadratureError(NumericalError):
    """Quadrature failed to converge to the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved tolerance {achieved:.3e})")
        self.achieved = achieved


class SingularMatrixError(NumericalError):
    """A matrix required to be well conditioned is numerically singular."""

    def __init__(self, message: str, condition_number: float):
        super().__init__(f"{message} (condition number {condition_number:.3e})")
        self.condition_number = condition_number


class DegenerateGeometryError(NumericalError):
    """The estimator's quadratic form degenerated (no unique minimizer)."""


class ZeroStateError(NumericalError):
    """All eigenvalues of a density matrix fell below the spectral floor."""
