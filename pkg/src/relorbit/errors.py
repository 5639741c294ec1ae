"""Exception hierarchy. Every error carries a machine-readable ``code``."""


class RelorbitError(Exception):
    """Base class for physics-domain failures."""

    code = "domain"

    def payload(self):
        return {"code": self.code, "message": str(self)}


class InvalidParameterError(RelorbitError):
    code = "invalid-parameter"


class SingularityError(RelorbitError):
    code = "singularity"


class SuperluminalError(RelorbitError):
    code = "superluminal"


class NoCircularOrbitError(RelorbitError):
    code = "no-circular-orbit"


class NonEquilibriumError(RelorbitError):
    code = "non-equilibrium"


class BasinExceededError(RelorbitError):
    code = "basin-exceeded"


class WrongRegimeError(RelorbitError):
    code = "wrong-regime"


class InsufficientDataError(RelorbitError):
    code = "insufficient-data"


class PreconditionError(RelorbitError):
    code = "precondition"


class OrientationError(RelorbitError):
    code = "orientation"


class OutOfBranchError(RelorbitError):
    code = "out-of-branch"


class InconsistencyError(RelorbitError):
    code = "inconsistency"


class TruncationError(RelorbitError):
    """Step budget exhausted; carries the partial trajectory when available."""

    code = "max-steps"

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
