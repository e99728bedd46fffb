class MdsError(Exception):
    pass


class DegeneracyError(MdsError):
    """Points coincide (or nearly so) where distinct points are required."""


class InvariantError(MdsError):
    pass


class ConfigurationError(MdsError):
    pass


class EvaluationError(MdsError):
    pass


class ChartSingularityError(MdsError):
    pass


class DomainError(MdsError):
    pass


class StructureViolationError(MdsError):
    pass


class CausalClassError(MdsError):
    pass


class IdenticalEventError(MdsError):
    pass


class ComparabilityError(MdsError):
    pass


class ConstructionError(MdsError):
    pass


class OracleInconsistencyError(MdsError):
    pass


class IngestionError(ConfigurationError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NotMonotoneError(MdsError):
    """Raised when a structure with a monotonicity witness is handed to the forward map."""

    def __init__(self, message, witness=None):
        self.witness = witness
        super().__init__(message)
