"""Numeric carriers: exact rationals and signed log-magnitude floats.

Every quantity in the library is either a :class:`fractions.Fraction`
(exact backend) or a :class:`LogFloat` (floating backend).  Both support
the ordinary arithmetic operators, so formulas are written once and run
under either backend.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Union

__all__ = [
    "LogFloat",
    "Scalar",
    "as_fraction",
    "fsum_scalars",
    "log_abs",
    "to_float",
]

_NEG_INF = float("-inf")
_LN2 = math.log(2.0)


def _rational_parts(v: Rational) -> tuple[float, int]:
    """Correctly rounded mantissa in [0.5, 1) and binary exponent of v."""
    num, den = v.numerator, v.denominator
    e = abs(num).bit_length() - den.bit_length()
    scaled = Fraction(num, den << e) if e >= 0 else Fraction(num << -e, den)
    m, extra = math.frexp(float(scaled))
    return m, e + extra


class LogFloat:
    """A real number with unbounded exponent range.

    Stored as ``mantissa * 2**exponent`` with ``0.5 <= |mantissa| < 1``
    and an unbounded Python-int exponent, so ``0.5**5000`` is as precise
    as ``0.5**5``.  The sign and the log-magnitude are exposed as
    :attr:`sign` and :attr:`log`; zero has ``sign == 0`` and
    ``log == -inf``.
    """

    __slots__ = ("_m", "_e")

    def __init__(self, mantissa: float = 0.0, exponent: int = 0):
        if mantissa == 0.0:
            self._m, self._e = 0.0, 0
            return
        if not math.isfinite(mantissa):
            raise ValueError(f"non-finite mantissa {mantissa!r}")
        m, extra = math.frexp(mantissa)
        self._m = m
        self._e = int(exponent) + extra

    # -- construction ------------------------------------------------------

    @classmethod
    def of(cls, value) -> "LogFloat":
        if isinstance(value, LogFloat):
            return value
        if isinstance(value, Rational):
            if value == 0:
                return cls()
            return cls(*_rational_parts(value))
        value = float(value)
        if math.isnan(value) or math.isinf(value):
            raise ValueError(f"cannot represent {value!r}")
        return cls(value, 0)

    @classmethod
    def from_log(cls, sign: int, log: float) -> "LogFloat":
        """Build ``sign * exp(log)`` for arbitrarily large ``|log|``."""
        if sign == 0 or log == _NEG_INF:
            return cls()
        e2 = log / _LN2
        whole = math.floor(e2)
        return cls(math.copysign(2.0 ** (e2 - whole), sign), whole)

    @classmethod
    def zero(cls) -> "LogFloat":
        return cls()

    @classmethod
    def one(cls) -> "LogFloat":
        return cls(1.0, 0)

    # -- views -----------------------------------------------------------------

    @property
    def sign(self) -> int:
        return 0 if self._m == 0.0 else (1 if self._m > 0 else -1)

    @property
    def log(self) -> float:
        """``log|v|`` (``-inf`` for zero)."""
        if self._m == 0.0:
            return _NEG_INF
        return math.log(abs(self._m)) + self._e * _LN2

    @property
    def log10(self) -> float:
        return self.log / math.log(10.0)

    def mantissa_exponent(self) -> tuple[float, int]:
        """``(m, e)`` with value ``m * 2**e`` exactly."""
        return self._m, self._e

    def __float__(self) -> float:
        if self._m == 0.0:
            return 0.0
        if self._e > 1100:
            return math.copysign(math.inf, self._m)
        if self._e < -1100:
            return 0.0 * self._m
        return math.ldexp(self._m, self._e)

    def __repr__(self) -> str:
        if -1000 < self._e < 1000:
            return f"LogFloat({float(self)!r})"
        return f"LogFloat({self._m!r}, {self._e})"

    def __bool__(self) -> bool:
        return self._m != 0.0

    # -- arithmetic ------------------------------------------------------------

    def __neg__(self) -> "LogFloat":
        return LogFloat(-self._m, self._e)

    def __abs__(self) -> "LogFloat":
        return LogFloat(abs(self._m), self._e)

    def __mul__(self, other) -> "LogFloat":
        other = LogFloat.of(other)
        return LogFloat(self._m * other._m, self._e + other._e)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogFloat":
        other = LogFloat.of(other)
        if other._m == 0.0:
            raise ZeroDivisionError("LogFloat division by zero")
        return LogFloat(self._m / other._m, self._e - other._e)

    def __rtruediv__(self, other) -> "LogFloat":
        return LogFloat.of(other) / self

    def __pow__(self, k: int) -> "LogFloat":
        if not isinstance(k, int):
            raise TypeError("LogFloat only supports integer powers")
        if k < 0:
            return LogFloat.one() / (self ** -k)
        result, base = LogFloat.one(), self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __add__(self, other) -> "LogFloat":
        other = LogFloat.of(other)
        if other._m == 0.0:
            return self
        if self._m == 0.0:
            return other
        big, small = (self, other) if self._e >= other._e else (other, self)
        shift = small._e - big._e
        if shift < -1100:
            return big
        return LogFloat(big._m + math.ldexp(small._m, shift), big._e)

    __radd__ = __add__

    def __sub__(self, other) -> "LogFloat":
        return self + (-LogFloat.of(other))

    def __rsub__(self, other) -> "LogFloat":
        return LogFloat.of(other) + (-self)

    # -- comparison --------------------------------------------------------------

    def __eq__(self, other) -> bool:
        try:
            other = LogFloat.of(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self._m == other._m and self._e == other._e

    def __hash__(self) -> int:
        return hash((self._m, self._e))

    def _cmp(self, other) -> int:
        diff = self - LogFloat.of(other)
        return diff.sign

    def __lt__(self, other) -> bool:
        return self._cmp(other) < 0

    def __le__(self, other) -> bool:
        return self._cmp(other) <= 0

    def __gt__(self, other) -> bool:
        return self._cmp(other) > 0

    def __ge__(self, other) -> bool:
        return self._cmp(other) >= 0


Scalar = Union[Fraction, LogFloat]


def to_float(v) -> float:
    """Nearest double; underflows to 0.0 and overflows to +-inf."""
    if isinstance(v, Fraction):
        try:
            return float(v)
        except OverflowError:
            return math.inf if v > 0 else -math.inf
    return float(v)


def log_abs(v) -> float:
    """``log|v|`` without leaving the log domain (``-inf`` for zero)."""
    if isinstance(v, LogFloat):
        return v.log
    if isinstance(v, Rational):
        return LogFloat.of(v).log
    v = float(v)
    return _NEG_INF if v == 0.0 else math.log(abs(v))


def as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    raise TypeError(f"{type(v).__name__} is not an exact rational")


def fsum_scalars(values: Iterable) -> Scalar:
    """Sum scalars: exactly for Fractions, compensated for LogFloats.

    LogFloats are rescaled to the largest exponent and summed with
    :func:`math.fsum`, so the result is the correctly rounded sum of the
    individual (already rounded) terms.
    """
    values = list(values)
    if not values:
        return Fraction(0)
    if all(isinstance(v, (Fraction, int)) for v in values):
        return sum(values, Fraction(0))
    logs = [LogFloat.of(v) for v in values]
    nonzero = [v for v in logs if v._m != 0.0]
    if not nonzero:
        return LogFloat.zero()
    top = max(v._e for v in nonzero)
    total = math.fsum(math.ldexp(v._m, v._e - top) for v in nonzero if v._e - top > -1100)
    return LogFloat(total, top)
