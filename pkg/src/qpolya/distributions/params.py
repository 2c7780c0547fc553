"""Parameter containers for the urn laws."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..errors import DomainError
from ..qcore import QBase, partial_sums
from ..scalar import LogFloat, Scalar, fsum_scalars, to_float

__all__ = [
    "LimitKind",
    "LimitParams",
    "PmfTable",
    "PolyaParams",
    "UrnSpec",
]


@dataclass(frozen=True)
class UrnSpec:
    """An urn with ``counts[v]`` balls of colour ``v`` (colours ordered).

    After every drawing the drawn ball goes back together with ``m`` more
    balls of its colour; ``m = -1`` is drawing without replacement.  A
    colour may start empty, but the urn as a whole may not, and at least
    two colours are required.
    """

    counts: tuple[int, ...]
    m: int
    q: QBase

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) < 2:
            raise DomainError("an urn needs at least two colours (k >= 1)")
        if any(c < 0 for c in counts):
            raise DomainError(f"negative ball count in {counts}")
        if sum(counts) < 1:
            raise DomainError("the urn is empty")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "q", QBase.of(self.q))

    @property
    def k(self) -> int:
        return len(self.counts) - 1

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def partial(self) -> list[int]:
        """``s_1, ..., s_{k+1}``."""
        return partial_sums(self.counts)

    def offset(self, color: int) -> int:
        """``s_{v-1}``: balls ahead of colour ``v`` (1-based)."""
        return sum(self.counts[: color - 1])

    def with_q(self, q) -> "UrnSpec":
        return UrnSpec(self.counts, self.m, QBase.of(q))


@dataclass(frozen=True)
class PolyaParams:
    """``n``, ``alphas = (a_1..a_k)``, ``alpha`` and the base ``q``.

    The laws live in base ``q**-m``.  :meth:`from_urn` sets
    ``a_j = -r_j/m`` and ``a = -r/m`` and marks the result validated;
    parameters typed in directly are accepted but unvalidated, so a
    negative probability raises instead of passing silently.
    """

    n: int
    alphas: tuple
    alpha: object
    q: QBase
    m: int
    validated: bool = False

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise DomainError(f"n must be a nonnegative integer, got {self.n}")
        if self.m == 0:
            raise DomainError("m = 0 has no alpha parametrization; use the "
                              "multinomial reduction")
        if len(self.alphas) < 1:
            raise DomainError("need at least one alpha_j")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "alphas", tuple(_coerce(a) for a in self.alphas))
        object.__setattr__(self, "alpha", _coerce(self.alpha))
        object.__setattr__(self, "q", QBase.of(self.q))
        last = self.alpha - sum(self.alphas)
        if isinstance(last, float) and not math.isfinite(last):
            raise DomainError("alpha_{k+1} is not finite")

    @classmethod
    def from_urn(cls, spec: UrnSpec, n: int) -> "PolyaParams":
        if spec.m == 0:
            raise DomainError("m = 0 has no alpha parametrization; use the "
                              "multinomial reduction")
        m = spec.m
        alphas = tuple(Fraction(-r, m) for r in spec.counts[:-1])
        return cls(n, alphas, Fraction(-spec.total, m), spec.q, m, validated=True)

    @property
    def k(self) -> int:
        return len(self.alphas)

    @property
    def alpha_last(self):
        return self.alpha - sum(self.alphas)

    @property
    def all_alphas(self) -> tuple:
        return self.alphas + (self.alpha_last,)

    @property
    def betas(self) -> list:
        """``b_j = a_1 + ... + a_j`` (equal to ``-s_j/m`` for an urn)."""
        return partial_sums(self.alphas)

    @property
    def base(self) -> QBase:
        """``q**-m``, the base every factor of the law is written in."""
        return self.q.power(-self.m)

    def replace(self, **changes) -> "PolyaParams":
        values = dict(n=self.n, alphas=self.alphas, alpha=self.alpha, q=self.q,
                      m=self.m, validated=self.validated)
        values.update(changes)
        return PolyaParams(**values)

    def counts(self) -> tuple[int, ...] | None:
        """The urn ``(r_1..r_{k+1})`` behind these parameters, if integral."""
        vals = [-a * self.m for a in self.all_alphas]
        if all(isinstance(v, Fraction) and v.denominator == 1 for v in vals):
            return tuple(int(v) for v in vals)
        return None


def _coerce(a):
    if isinstance(a, LogFloat):
        return a
    if isinstance(a, (int, Fraction)):
        return Fraction(a)
    if isinstance(a, str):
        return Fraction(a)
    return float(a)


class LimitKind(enum.Enum):
    THETA = "theta"     # 0 < q < 1, rates theta_j
    LAMBDA = "lambda"   # q > 1, rates lambda_j


@dataclass(frozen=True)
class LimitParams:
    """Rates of a large-urn limit law.

    ``THETA`` needs ``0 < q < 1``; ``LAMBDA`` needs ``q > 1``.  For
    ``m > 0`` every rate lies in (0, 1).  For ``m < 0`` the upper bound is
    ``q**(-m(nu-1))`` (``THETA``) or ``q**(m(nu-1))`` (``LAMBDA``) with a
    positive integer ``nu`` that must be at least the number of drawings.
    """

    kind: LimitKind
    rates: tuple
    q: QBase
    m: int
    nu: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", LimitKind(self.kind))
        object.__setattr__(self, "q", QBase.of(self.q))
        object.__setattr__(self, "rates", tuple(_coerce(t) for t in self.rates))
        if not self.rates:
            raise DomainError("need at least one rate")
        if self.m == 0:
            raise DomainError("the limit laws need m != 0")
        below = self.q.log_value < 0
        if self.kind is LimitKind.THETA and not below:
            raise DomainError("theta rates need 0 < q < 1")
        if self.kind is LimitKind.LAMBDA and below:
            raise DomainError("lambda rates need q > 1")
        if self.m < 0 and (self.nu is None or self.nu < 1):
            raise DomainError("m < 0 needs a positive integer nu")
        top = self.upper_bound()
        for t in self.rates:
            if not _positive(t) or not _below(t, top):
                raise DomainError(f"rate {t} outside (0, {float(top):.6g})")

    @property
    def k(self) -> int:
        return len(self.rates)

    def upper_bound(self):
        if self.m > 0:
            return 1
        sign = -1 if self.kind is LimitKind.THETA else 1
        return self.q.pow(sign * self.m * (self.nu - 1))

    def check_draws(self, n: int) -> None:
        if self.m < 0 and self.nu < n:
            raise DomainError(f"nu = {self.nu} must be at least n = {n}")


def _positive(t) -> bool:
    return t.sign > 0 if isinstance(t, LogFloat) else t > 0


def _below(t, top) -> bool:
    if isinstance(top, LogFloat) or isinstance(t, LogFloat):
        return LogFloat.of(t) < LogFloat.of(top)
    if isinstance(t, float):
        return t < float(top)
    return t < top


@dataclass
class PmfTable:
    """Outcomes in lexicographic order with their probabilities.

    ``normalization_defect`` is ``|sum(probs) - 1|``.  Truncated tables
    (infinite support) also carry ``tail_bound``, an upper bound on the
    probability of the outcomes left out, and ``proper`` is False when the
    law itself loses mass (a stopping time that may never happen).
    """

    support: list[tuple[int, ...]]
    probs: list
    normalization_defect: float
    truncated: bool = False
    tail_bound: float = 0.0
    proper: bool = True
    meta: dict = field(default_factory=dict)

    @classmethod
    def build(cls, support, probs, *, truncated=False, tail_bound=0.0,
              proper=True, meta=None) -> "PmfTable":
        support = [tuple(s) for s in support]
        total = fsum_scalars(probs) if probs else Fraction(0)
        defect = abs(to_float(total - 1))
        return cls(support, list(probs), defect, truncated, tail_bound, proper,
                   dict(meta or {}))

    def __len__(self) -> int:
        return len(self.support)

    def as_dict(self) -> dict:
        return dict(zip(self.support, self.probs))

    def floats(self) -> list[float]:
        return [to_float(p) for p in self.probs]

    def total(self) -> Scalar:
        return fsum_scalars(self.probs) if self.probs else Fraction(0)

    def get(self, outcome, default=0):
        return self.as_dict().get(tuple(outcome), default)
