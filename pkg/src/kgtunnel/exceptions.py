"""Exception hierarchy shared by the solver, the simulator and the CLI."""


class KGTunnelError(Exception):
    """Base class for all package errors."""


class InvalidParameters(KGTunnelError, ValueError):
    """Physical parameters or simulation settings violate an invariant."""


class DomainError(KGTunnelError, ValueError):
    """A frequency lies outside the domain of the requested quantity."""


class PoleError(KGTunnelError, ArithmeticError):
    """Evaluation requested exactly at (or numerically on) a pole."""


class NoRoot(KGTunnelError):
    """A bracket for the mode equation has no sign change."""


class MaxIterations(KGTunnelError):
    """A root search did not converge in the allowed number of iterations."""


class NotAMode(KGTunnelError):
    """A mode shape was requested at a frequency that does not solve the mode equation."""


class GeometryError(KGTunnelError, ValueError):
    """The grid cannot represent a required location."""


class StabilityError(KGTunnelError):
    """The time integration blew up."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class InsufficientCycles(KGTunnelError):
    """Too few beat cycles in a time series to measure a period."""


class PeaksNotResolved(KGTunnelError):
    """Two spectral peaks could not be separated in the requested band."""
