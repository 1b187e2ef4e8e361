"""Exception types raised across the package."""


class UscsimError(Exception):
    """Base class for all library errors."""


class InvalidSubsystem(UscsimError):
    """An index addressed the wrong kind of subsystem (or none at all)."""


class LayoutMismatch(UscsimError):
    """Operands live on different Hilbert-space layouts."""


class InvalidTruncation(UscsimError):
    """A Fock cutoff is below 1 or the space would exceed the dense budget."""


class NotHermitian(UscsimError):
    pass


class InvalidState(UscsimError):
    pass


class SingularDetuning(UscsimError):
    """A perturbative expression hit a vanishing energy denominator."""


class ResonanceMismatch(UscsimError):
    """Drive frequencies do not satisfy the resonance needed for an effective model."""


class StepTooCoarse(UscsimError):
    """Time step exceeds the stability/accuracy rule of the integrator."""


class CommensurabilityError(UscsimError):
    """Protocol timing does not close the cavity loop an integer number of times."""


class LoopNotClosed(UscsimError):
    """The cavity stayed entangled with the qubits at the end of a gate sequence."""


class NonUniqueSteadyState(UscsimError):
    pass


class TruncationLeak(UscsimError):
    """Population reached the top Fock levels of a truncated mode."""


class ParseError(UscsimError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)
