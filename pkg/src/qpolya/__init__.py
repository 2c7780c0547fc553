"""Multivariate q-Polya and inverse q-Polya distributions."""

from .errors import (
    DomainError,
    InfeasibleError,
    NonTerminationError,
    QDivisionByZero,
    QPolyaError,
    SupportTooLarge,
    TruncationError,
    UnsupportedExactInput,
    UnvalidatedParameterError,
)
from .qcore import (
    Backend,
    CompositionVector,
    QBase,
    Regime,
    bounded_compositions,
    q_binomial,
    q_factorial,
    q_factorial_order,
    q_multinomial,
    q_number,
)
from .scalar import LogFloat

__version__ = "0.1.0"
