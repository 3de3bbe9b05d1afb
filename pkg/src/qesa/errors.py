"""Exception hierarchy shared by every qesa module."""


class QesaError(Exception):
    """Base class for all library errors."""


class DimensionError(QesaError, ValueError):
    """Mismatched or unsupported dimension, mode count or index."""


class ModeOverlapError(QesaError, ValueError):
    """Two states claim the same spatial mode (usually a mode-labelling bug)."""


class NormalizationError(QesaError, ValueError):
    """A state that must be normalized is not."""


class NonUnitaryError(QesaError, ValueError):
    """Matrix fails the unitarity check; ``deviation`` holds max |U^dag U - I|."""

    def __init__(self, message: str, deviation: float):
        super().__init__(message)
        self.deviation = deviation


class AuxConstraintError(QesaError, ValueError):
    """Auxiliary-state design violates one of its combinatorial constraints."""

    def __init__(self, clause: str, message: str):
        super().__init__(f"[{clause}] {message}")
        self.clause = clause


class SymmetryCheckError(QesaError):
    """Sampled detection patterns disagree, so single-pattern scaling is invalid."""

    def __init__(self, message: str, table: list):
        super().__init__(message)
        self.table = table


class ScheduleError(QesaError):
    """Emitter schedule produced a collision, mis-route or bad delay."""

    def __init__(self, message: str, violations: list | None = None):
        super().__init__(message)
        self.violations = list(violations or [])
