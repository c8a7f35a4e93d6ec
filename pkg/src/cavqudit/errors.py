"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for domain errors raised by the simulator."""


class InconsistentParameters(ValueError, SimulationError):
    """Calibration inputs contradict each other beyond numerical tolerance."""


class NumericalFailure(SimulationError):
    """An integrator, optimizer or fit failed to meet its tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class CalibrationFailure(SimulationError):
    """A calibration sweep found no usable resonance or oscillation."""


class LeakageError(SimulationError):
    """Projected propagator lost too much norm to truncated levels."""


class ResourceLimitError(SimulationError):
    """A branching simulation exceeded its configured size limits."""


class TruncationWarning(UserWarning):
    """Population leaked past the configured Hilbert-space cutoff."""
