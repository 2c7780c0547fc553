"""Exception hierarchy shared by every qpolya module."""


class QPolyaError(Exception):
    """Base class for all library errors."""


class DomainError(QPolyaError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class UnsupportedExactInput(DomainError):
    """The exact backend was asked for an irrational power of q."""


class QDivisionByZero(QPolyaError, ZeroDivisionError):
    """A q-factorial in a denominator vanished."""


class InfeasibleError(DomainError):
    """An urn operation would drive a ball count below zero.

    ``draw_index`` is the 1-based draw at which the violation happened,
    when known.
    """

    def __init__(self, message: str, draw_index: int | None = None):
        super().__init__(message)
        self.draw_index = draw_index


class UnvalidatedParameterError(QPolyaError, ValueError):
    """Free-form parameters produced a negative probability."""


class TruncationError(QPolyaError, ArithmeticError):
    """An infinite sum could not be certified within the term budget."""

    def __init__(self, message: str, achieved_bound: float):
        super().__init__(message)
        self.achieved_bound = achieved_bound


class SupportTooLarge(QPolyaError, ValueError):
    """Enumerating a support would exceed the configured cap."""


class NonTerminationError(QPolyaError, RuntimeError):
    """An inverse-sampling run did not stop.

    ``escaped`` is True when the run was abandoned because the chance of
    ever stopping fell below the escape threshold, False when the hard
    draw cap was hit.
    """

    def __init__(self, message: str, draws: int, escaped: bool):
        super().__init__(message)
        self.draws = draws
        self.escaped = escaped
