"""q-numbers, q-factorials and q-multinomial coefficients.

The base is a :class:`QBase`.  A base stores a positive root ``q0`` and
an integer ``scale`` and represents ``q = q0**scale``; powers of the
base are therefore ``q0**(scale*x)``, which stays rational whenever
``scale*x`` is an integer even if ``x`` itself is not.  This is exactly
the situation for the urn parameters ``alpha = -r/m`` in base ``q**-m``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from numbers import Rational
from typing import Iterable, Iterator, Sequence

from .errors import DomainError, QDivisionByZero, UnsupportedExactInput
from .scalar import LogFloat, Scalar

__all__ = [
    "Backend",
    "CompositionVector",
    "QBase",
    "Regime",
    "bounded_compositions",
    "partial_sums",
    "q_binomial",
    "q_factorial",
    "q_factorial_order",
    "q_multinomial",
    "q_multinomial_base_invert",
    "q_multinomial_via_recurrence",
    "q_number",
    "tail_sums",
]


class Regime(enum.Enum):
    SUB_UNIT = "sub-unit"
    SUPER_UNIT = "super-unit"


class Backend(enum.Enum):
    EXACT = "exact"
    LOG = "log"


def _to_rational(value) -> Fraction | None:
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except ValueError:
            return None
    return None


def _log_positive(v) -> float:
    if isinstance(v, Fraction):
        diff = v - 1
        if abs(diff) < Fraction(1, 4):
            # log1p keeps full relative precision near the classical limit
            return math.log1p(float(diff))
        return math.log(float(v))
    v = float(v)
    return math.log1p(v - 1.0) if abs(v - 1.0) < 0.25 else math.log(v)


@dataclass(frozen=True)
class QBase:
    """The deformation parameter ``q = root**scale``.

    ``backend`` selects exact rational arithmetic or log-domain floats.
    Build instances with :meth:`of`; :meth:`power` and :meth:`inverse`
    derive the bases ``q**m`` and ``1/q`` that the distributions use.
    """

    root: Fraction | float
    scale: int = 1
    backend: Backend = Backend.LOG

    def __post_init__(self):
        if not self.root > 0:
            raise DomainError(f"q must be positive, got {self.root}")
        if self.root == 1 or self.scale == 0:
            raise DomainError("q must differ from 1")
        if self.backend is Backend.EXACT and not isinstance(self.root, Fraction):
            raise DomainError("exact backend needs a rational q")
        object.__setattr__(self, "_log_root", _log_positive(self.root))
        object.__setattr__(self, "_root_float", float(self.root))
        object.__setattr__(self, "_root_is_float", Fraction(float(self.root)) == self.root)

    @classmethod
    def of(cls, q, exact: bool | None = None) -> "QBase":
        """Parse ``q`` from a number or a string such as ``"1/2"``.

        With ``exact=None`` the exact backend is chosen for ints,
        Fractions and rational strings; floats default to the log backend.
        """
        if isinstance(q, QBase):
            if exact is None:
                return q
            return q.with_backend(Backend.EXACT if exact else Backend.LOG)
        rational = _to_rational(q)
        if exact is None:
            exact = rational is not None and not isinstance(q, float)
        if exact:
            if rational is None:
                rational = Fraction(str(q))
            return cls(rational, 1, Backend.EXACT)
        root = rational if rational is not None else float(q)
        if isinstance(root, Fraction):
            root = float(root) if abs(root - 1) >= Fraction(1, 4) else root
        return cls(root, 1, Backend.LOG)

    def with_backend(self, backend: Backend) -> "QBase":
        root = self.root
        if backend is Backend.EXACT and not isinstance(root, Fraction):
            root = Fraction(str(root))
        return QBase(root, self.scale, backend)

    @property
    def exact(self) -> bool:
        return self.backend is Backend.EXACT

    @property
    def log_value(self) -> float:
        return self.scale * self._log_root

    @property
    def value(self):
        if self.exact:
            return self.root ** self.scale
        return math.exp(self.log_value)

    @property
    def regime(self) -> Regime:
        return Regime.SUB_UNIT if self.log_value < 0 else Regime.SUPER_UNIT

    def power(self, m: int) -> "QBase":
        """The base ``q**m`` (``m`` a nonzero integer)."""
        if m == 0:
            raise DomainError("q**0 == 1 is not a valid base")
        return QBase(self.root, self.scale * m, self.backend)

    def inverse(self) -> "QBase":
        return self.power(-1)

    # -- scalars in this backend ------------------------------------------

    def one(self) -> Scalar:
        return Fraction(1) if self.exact else LogFloat.one()

    def zero(self) -> Scalar:
        return Fraction(0) if self.exact else LogFloat.zero()

    def lift(self, value) -> Scalar:
        """Convert a plain number into this backend's scalar type."""
        if self.exact:
            if isinstance(value, LogFloat):
                raise UnsupportedExactInput("cannot lift a LogFloat exactly")
            rational = _to_rational(value)
            if rational is None:
                rational = Fraction(str(value))
            return rational
        return LogFloat.of(value)

    def exponent(self, x):
        """``scale * x`` as an int (exact backend) or a float."""
        if self.exact:
            e = _to_rational(x)
            if e is None:
                raise UnsupportedExactInput(f"non-rational exponent {x!r}")
            e = e * self.scale
            if e.denominator != 1:
                raise UnsupportedExactInput(
                    f"q**{x} is irrational for this base; use the log backend"
                )
            return int(e)
        if isinstance(x, Rational):
            # kept exact; _float_pow splits off the integer part
            return Fraction(x) * self.scale
        return float(x) * self.scale

    def pow(self, x) -> Scalar:
        """``q**x``."""
        e = self.exponent(x)
        if self.exact:
            return self.root ** e
        return _float_pow(self._root_float, self._log_root, e, self._root_is_float)


_CHUNK_LOG = 500.0


def _float_pow(root: float, log_root: float, e, root_is_float: bool = True) -> LogFloat:
    """``root**e`` as a LogFloat, accurate to a few ulps for any size of e.

    ``e`` (a float or an exact Fraction) is split into its integer part
    and a fraction in [0, 1), so the rounding of a large exponent does not
    leak into the result.  The integer power uses ``math.pow`` while it
    fits in a double and a chunked power beyond that.
    """
    if e == 0:
        return LogFloat.one()
    if isinstance(e, Fraction):
        whole = e.numerator // e.denominator
        frac = float(e - whole)
    else:
        e = float(e)
        whole = math.floor(e)
        frac = e - whole
    head = _int_pow(root, log_root, whole, root_is_float)
    if frac == 0:
        return head
    return head * LogFloat.of(math.exp(frac * log_root))


def _int_pow(root: float, log_root: float, k: int, root_is_float: bool) -> LogFloat:
    if k == 0:
        return LogFloat.one()
    t = k * log_root
    if abs(t) < 700.0:
        # math.pow is within an ulp when the root is exact; otherwise the
        # error of the rounded root would grow with k, and exp(t) is better
        return LogFloat.of(math.pow(root, k) if root_is_float else math.exp(t))
    chunk = int(math.copysign(math.floor(_CHUNK_LOG / abs(log_root)), k))
    count, rest = divmod(k, chunk)
    return (_int_pow(root, log_root, chunk, root_is_float) ** count
            * _int_pow(root, log_root, rest, root_is_float))


def _one_minus_pow(q: QBase, e) -> LogFloat:
    """``1 - q0**e`` without cancellation near ``e*log(q0) = 0``."""
    t = e * q._log_root
    if abs(t) < 0.5:
        return LogFloat.of(-math.expm1(t))
    return LogFloat.one() - _float_pow(q._root_float, q._log_root, e, q._root_is_float)


def q_number(x, q: QBase) -> Scalar:
    """``[x]_q = (1 - q**x) / (1 - q)``.

    The log backend forms both differences with ``expm1`` so that the
    value tends to ``x`` smoothly as ``q`` approaches 1.
    """
    e = q.exponent(x)
    if q.exact:
        return (1 - q.root ** e) / (1 - q.root ** q.scale)
    if e == 0:
        return LogFloat.zero()
    return _one_minus_pow(q, e) / _one_minus_pow(q, q.scale)


def _product(values: Iterable[Scalar], q: QBase) -> Scalar:
    return reduce(lambda a, b: a * b, values, q.one())


def q_factorial_order(x, r: int, q: QBase) -> Scalar:
    """``[x]_{r,q}``: the falling product ``[x]_q [x-1]_q ... [x-r+1]_q``.

    Order zero gives 1; a negative order ``-r`` gives ``1/[x+r]_{r,q}``.
    """
    if r == 0:
        return q.one()
    if r > 0:
        return _product((q_number(x - i, q) for i in range(r)), q)
    r = -r
    denom = q_factorial_order(x + r, r, q)
    if not denom:
        raise QDivisionByZero(f"[{x}+{r}]_{{{r},q}} vanishes")
    return q.one() / denom


def q_factorial(r: int, q: QBase) -> Scalar:
    """``[r]_q! = [1]_q [2]_q ... [r]_q``."""
    if r < 0:
        raise DomainError("q-factorial needs a nonnegative integer")
    return q_factorial_order(r, r, q)


def q_multinomial(x, parts: Sequence[int], q: QBase) -> Scalar:
    """``[x]_{s,q} / prod_j [r_j]_q!`` with ``s = sum(parts)``."""
    if any(p < 0 for p in parts):
        return q.zero()
    num = q_factorial_order(x, sum(parts), q)
    if not num:
        return num
    return num / _product((q_factorial(p, q) for p in parts), q)


def q_binomial(x, r: int, q: QBase) -> Scalar:
    """Generalised Gaussian coefficient ``[x]_{r,q} / [r]_q!``; 0 for r < 0."""
    if r < 0:
        return q.zero()
    return q_factorial_order(x, r, q) / q_factorial(r, q)


def partial_sums(parts: Sequence) -> list:
    """``s_j = parts_1 + ... + parts_j`` for j = 1..k."""
    out, acc = [], 0
    for p in parts:
        acc = acc + p
        out.append(acc)
    return out


def tail_sums(parts: Sequence) -> list:
    """``m_j = parts_j + ... + parts_k`` for j = 1..k."""
    return partial_sums(parts[::-1])[::-1]


def q_multinomial_base_invert(x, parts: Sequence[int], q: QBase) -> Scalar:
    """The coefficient in base ``1/q``, obtained from the base-``q`` value.

    Uses ``C_{1/q} = q**(-sum_j r_j (x - m_j)) * C_q``.
    """
    tails = tail_sums(parts)
    shift = sum(r * (x - m) for r, m in zip(parts, tails))
    return q.pow(-shift) * q_multinomial(x, parts, q)


_RECURRENCES = ("R23", "R24", "R25", "R26")


def q_multinomial_via_recurrence(x: int, parts: Sequence[int], q: QBase,
                                 variant: str = "R23") -> Scalar:
    """Evaluate a q-multinomial coefficient purely from a Pascal-type rule.

    Each variant peels one unit off ``x`` and distributes it over the
    parts with its own power of ``q``; memoised dynamic programming over
    ``(x, parts)`` with the boundary values ``C(0; 0..0) = 1`` and
    ``C = 0`` whenever a part is negative or exceeds what ``x`` allows.
    """
    if variant not in _RECURRENCES:
        raise DomainError(f"unknown recurrence {variant!r}")
    if not (isinstance(x, int) and x >= 0):
        raise DomainError("recurrence evaluation needs a nonnegative integer x")
    k = len(parts)
    memo: dict[tuple[int, tuple[int, ...]], Scalar] = {}

    def coef(xx: int, rr: tuple[int, ...]) -> Scalar:
        if any(v < 0 for v in rr) or sum(rr) > xx:
            return q.zero()
        if xx == 0:
            return q.one()
        key = (xx, rr)
        if key in memo:
            return memo[key]
        s = partial_sums(rr)
        t = tail_sums(rr)
        stay = coef(xx - 1, rr)
        moves = [coef(xx - 1, rr[:j] + (rr[j] - 1,) + rr[j + 1:]) for j in range(k)]
        if variant == "R23":
            total = stay + _sum(q.pow(xx - t[j]) * moves[j] for j in range(k))
        elif variant == "R24":
            total = q.pow(s[-1]) * stay + _sum(
                q.pow(s[j - 1] if j else 0) * moves[j] for j in range(k))
        elif variant == "R25":
            total = q.pow(t[0]) * stay + _sum(
                q.pow(t[j + 1] if j + 1 < k else 0) * moves[j] for j in range(k))
        else:
            total = stay + _sum(q.pow(xx - s[j]) * moves[j] for j in range(k))
        memo[key] = total
        return total

    if k == 0:
        return q.one()
    return coef(x, tuple(parts))


def _sum(values: Iterable[Scalar]) -> Scalar:
    it = iter(values)
    acc = next(it)
    for v in it:
        acc = acc + v
    return acc


class CompositionVector(tuple):
    """An ordered tuple of nonnegative counts with an optional cap.

    Behaves as a plain tuple; adds the forward partial sums and backward
    tail sums used throughout the formulas.
    """

    cap: int | None

    def __new__(cls, parts: Iterable[int], cap: int | None = None):
        obj = super().__new__(cls, (int(p) for p in parts))
        if any(p < 0 for p in obj):
            raise DomainError(f"negative part in {tuple(obj)}")
        if cap is not None and sum(obj) > cap:
            raise DomainError(f"parts {tuple(obj)} exceed cap {cap}")
        obj.cap = cap
        return obj

    @property
    def total(self) -> int:
        return sum(self)

    @property
    def partial(self) -> list[int]:
        return partial_sums(self)

    @property
    def tails(self) -> list[int]:
        return tail_sums(self)

    def complement(self) -> int:
        """``cap - total``: the implied last coordinate."""
        if self.cap is None:
            raise DomainError("no cap set")
        return self.cap - self.total


def bounded_compositions(k: int, n: int) -> Iterator[tuple[int, ...]]:
    """All k-tuples of nonnegative integers with sum <= n, lexicographic."""
    if k == 0:
        yield ()
        return
    for first in range(n + 1):
        for rest in bounded_compositions(k - 1, n - first):
            yield (first,) + rest


def boxed_tuples(bounds: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """All tuples with ``0 <= t_j <= bounds[j]``, lexicographic."""
    if not bounds:
        yield ()
        return
    for first in range(bounds[0] + 1):
        for rest in boxed_tuples(bounds[1:]):
            yield (first,) + rest
