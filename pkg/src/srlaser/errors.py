"""Exception types raised by the solvers."""


class ParameterError(ValueError):
    """A physical parameter is outside its allowed domain."""


class StiffnessError(RuntimeError):
    """The ODE integrator could not take a step of usable size."""

    def __init__(self, message, component=None, time=None):
        super().__init__(message)
        self.component = component
        self.time = time


class SettleTimeout(RuntimeError):
    """No steady state was detected before ``t_max``."""

    def __init__(self, message, state=None, time=None):
        super().__init__(message)
        self.state = state
        self.time = time


class SolverError(RuntimeError):
    """The algebraic steady-state solver found no acceptable root."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class NoCollectiveRegionError(ValueError):
    """The atom number is too small for any collective emission."""


class HilbertSizeError(ValueError):
    """The truncated Hilbert space exceeds the exact solver's size cap."""
