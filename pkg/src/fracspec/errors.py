"""Exception hierarchy.  Every error carries a stable CLI exit code."""


class FracspecError(Exception):
    exit_code = 3


class ConfigError(FracspecError, ValueError):
    exit_code = 2


class GraphError(FracspecError, ValueError):
    exit_code = 2


class LoopEdge(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class NonPositiveWeight(GraphError):
    pass


class UnknownPreset(ConfigError):
    pass


class InconsistentGluing(ConfigError):
    pass


class InvalidRatio(ConfigError):
    pass


class BadPartition(ConfigError):
    pass


class OutOfWindow(ConfigError):
    pass


class DomainError(FracspecError, ValueError):
    pass


class OutOfRange(FracspecError, ValueError):
    pass


class SolverFailure(FracspecError, RuntimeError):
    pass


class SingularSystem(SolverFailure):
    pass


class IncompatibleWeights(FracspecError, ValueError):
    pass


class CompatibilityViolation(FracspecError):
    """Raised when the discrete energies fail compatibility or self-similarity."""

    def __init__(self, message, worst_defect):
        super().__init__(f"{message} (worst relative defect {worst_defect:.3e})")
        self.worst_defect = worst_defect


class BoundViolation(FracspecError):
    exit_code = 4
