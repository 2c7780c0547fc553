"""Multivariate q-Vandermonde, q-Cauchy and inverse q-Vandermonde sums.

Every function here evaluates the *summation* side of an identity term
by term; the closed side is available separately (``*_lhs``) so the two
can be compared.  The finite sums run lexicographically over
``(r_1..r_k)``; the inverse sums are infinite and are truncated with a
geometric tail estimate.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterator, Sequence

from .errors import DomainError, TruncationError
from .qcore import (
    QBase,
    bounded_compositions,
    partial_sums,
    q_binomial,
    q_factorial_order,
    q_multinomial,
    q_number,
)
from .scalar import LogFloat, Scalar, fsum_scalars, log_abs, to_float

__all__ = [
    "FINITE_IDENTITIES",
    "INVERSE_IDENTITIES",
    "IdentityInstance",
    "IdentityReport",
    "TruncationPolicy",
    "cauchy_lhs",
    "cauchy_sum",
    "cauchy_sum_shifted",
    "cauchy_shifted_lhs",
    "inverse_vandermonde_lhs",
    "inverse_vandermonde_sum",
    "run_finite_suite",
    "run_inverse_suite",
    "vandermonde_lhs",
    "vandermonde_sum",
]

VANDERMONDE = ("E27", "E27a", "E28", "E28a")
CAUCHY = ("E29", "E29a", "E210", "E210a")
CAUCHY_SHIFTED = ("E29b", "E210b")
INVERSE = ("E211", "E212")
FINITE_IDENTITIES = VANDERMONDE + CAUCHY + CAUCHY_SHIFTED
INVERSE_IDENTITIES = INVERSE


@dataclass(frozen=True)
class IdentityInstance:
    """``n`` and the ``k+1`` arguments ``x_1..x_{k+1}`` of an identity."""

    n: int
    xs: tuple
    q: QBase

    def __post_init__(self):
        # floats become their exact binary value, so sums of arguments
        # and the exponents built from them carry no rounding
        object.__setattr__(self, "xs", tuple(Fraction(x) if isinstance(x, float) else x
                                             for x in self.xs))
        if len(self.xs) < 2:
            raise DomainError("need k >= 1, i.e. at least two arguments")
        if not (isinstance(self.n, int) and self.n >= 1):
            raise DomainError("n must be a positive integer")

    @property
    def k(self) -> int:
        return len(self.xs) - 1

    @property
    def tails(self) -> list:
        """``z_j = x_{j+1} + ... + x_{k+1}`` for j = 1..k."""
        xs = self.xs
        return [sum(xs[j + 1:], 0) for j in range(self.k)]

    @property
    def total(self):
        return sum(self.xs, 0)


@dataclass(frozen=True)
class TruncationPolicy:
    tail_tolerance: float = 1e-12
    max_terms_per_index: int = 2000

    def __post_init__(self):
        if not self.tail_tolerance > 0:
            raise DomainError("tail_tolerance must be positive")
        if self.max_terms_per_index < 1:
            raise DomainError("max_terms_per_index must be >= 1")


def _check_variant(variant: str, allowed: tuple[str, ...]) -> None:
    if variant not in allowed:
        raise DomainError(f"variant must be one of {allowed}, got {variant!r}")


def _points(inst: IdentityInstance) -> Iterator[tuple[tuple[int, ...], list[int], int]]:
    for rs in bounded_compositions(inst.k, inst.n):
        yield rs, partial_sums(rs), inst.n - sum(rs)


def _exponent(variant: str, inst: IdentityInstance, rs, s, z):
    n, xs, k = inst.n, inst.xs, inst.k
    if variant in ("E27", "E29"):
        return sum((n - s[j]) * (xs[j] - rs[j]) for j in range(k))
    if variant in ("E27a", "E29a"):
        return sum(rs[j] * z[j] for j in range(k))
    if variant in ("E28", "E210"):
        return sum(rs[j] * (z[j] - (n - s[j])) for j in range(k))
    return sum(xs[j] * (n - s[j]) for j in range(k))


def vandermonde_lhs(inst: IdentityInstance, variant: str) -> Scalar:
    _check_variant(variant, VANDERMONDE)
    top = inst.total if variant in ("E27", "E28") else inst.total + inst.n - 1
    return q_factorial_order(top, inst.n, inst.q)


def vandermonde_sum(inst: IdentityInstance, variant: str = "E27") -> Scalar:
    """Multiple sum of a multivariate q-Vandermonde formula.

    ``E27``/``E28`` sum falling q-factorials ``[x_j]_{r_j}`` against
    ``[x_1+...+x_{k+1}]_{n,q}``; ``E27a``/``E28a`` use the rising forms
    ``[x_j+r_j-1]_{r_j}`` against ``[x_1+...+x_{k+1}+n-1]_{n,q}``.
    """
    _check_variant(variant, VANDERMONDE)
    q, n, xs = inst.q, inst.n, inst.xs
    z = inst.tails
    rising = variant.endswith("a")
    terms = []
    for rs, s, last in _points(inst):
        full = rs + (last,)
        coef = q_multinomial(n, rs, q)
        prod = q.one()
        for x, r in zip(xs, full):
            prod = prod * q_factorial_order(x + r - 1 if rising else x, r, q)
            if not prod:
                break
        if not prod:
            continue
        terms.append(coef * q.pow(_exponent(variant, inst, rs, s, z)) * prod)
    return fsum_scalars(terms) if terms else q.zero()


def cauchy_lhs(inst: IdentityInstance, variant: str) -> Scalar:
    _check_variant(variant, CAUCHY)
    top = inst.total if variant in ("E29", "E210") else inst.total + inst.n - 1
    return q_binomial(top, inst.n, inst.q)


def cauchy_sum(inst: IdentityInstance, variant: str = "E29") -> Scalar:
    """Multiple sum of a multivariate q-Cauchy formula (Gaussian products)."""
    _check_variant(variant, CAUCHY)
    q, xs = inst.q, inst.xs
    z = inst.tails
    rising = variant.endswith("a")
    terms = []
    for rs, s, last in _points(inst):
        full = rs + (last,)
        prod = q.one()
        for x, r in zip(xs, full):
            prod = prod * q_binomial(x + r - 1 if rising else x, r, q)
            if not prod:
                break
        if not prod:
            continue
        terms.append(q.pow(_exponent(variant, inst, rs, s, z)) * prod)
    return fsum_scalars(terms) if terms else q.zero()


def cauchy_shifted_lhs(r: int, n: int, k: int, q: QBase) -> Scalar:
    return q_binomial(r + k, n + k, q)


def cauchy_sum_shifted(r: int, n: int, xs: Sequence[int], q: QBase,
                       variant: str = "E29b") -> Scalar:
    """Sum over ``r_j = x_j..r`` (``sum r_j <= r``) equal to ``[r+k, n+k]_q``.

    ``xs`` holds ``x_1..x_k``; ``x_{k+1} = n - sum(xs)`` and
    ``r_{k+1} = r - sum(r_j)``.  ``E210b`` uses the per-term weight
    ``q**sum_j (x_j+1)(r - n - s_j + y_j)``.
    """
    _check_variant(variant, CAUCHY_SHIFTED)
    xs = tuple(xs)
    k = len(xs)
    if k < 1 or any(x < 0 for x in xs) or not sum(xs) <= n <= r:
        raise DomainError("need nonnegative x_j with sum(x) <= n <= r")
    y = partial_sums(xs)
    x_last = n - y[-1]
    terms = []
    for extra in bounded_compositions(k, r - sum(xs)):
        rs = tuple(x + e for x, e in zip(xs, extra))
        s = partial_sums(rs)
        r_last = r - s[-1]
        if r_last < x_last:
            continue
        if variant == "E29b":
            e = sum((rs[j] - xs[j]) * (n - y[j] + k - j) for j in range(k))
        else:
            e = sum((xs[j] + 1) * (r - n - s[j] + y[j]) for j in range(k))
        prod = q.one()
        for rj, xj in zip(rs + (r_last,), xs + (x_last,)):
            prod = prod * q_binomial(rj, xj, q)
        terms.append(q.pow(e) * prod)
    return fsum_scalars(terms) if terms else q.zero()


def inverse_vandermonde_lhs(inst: IdentityInstance) -> Scalar:
    """``1/[x_{k+1}]_{n,q}``."""
    return inst.q.one() / q_factorial_order(inst.xs[-1], inst.n, inst.q)


def _is_nonneg_int(x) -> bool:
    if isinstance(x, Rational):
        return x >= 0 and Fraction(x).denominator == 1
    return float(x).is_integer() and x >= 0


class _Prefix:
    """Lazily extended prefix products ``f(0) f(1) ... f(i-1)``."""

    def __init__(self, factor: Callable[[int], Scalar], one: Scalar):
        self._factor = factor
        self._vals = [one]

    def __getitem__(self, i: int) -> Scalar:
        while len(self._vals) <= i:
            j = len(self._vals) - 1
            self._vals.append(self._vals[j] * self._factor(j))
        return self._vals[i]


def _abs_log(v: Scalar) -> float:
    return log_abs(v)


def inverse_vandermonde_sum(inst: IdentityInstance, variant: str = "E211",
                            policy: TruncationPolicy | None = None
                            ) -> tuple[Scalar, float]:
    """Truncated multiple sum of an inverse q-Vandermonde expansion.

    Returns ``(partial_sum, tail_bound)``; the target is
    ``1/[x_{k+1}]_{n,q}``.  Terms are added in shells of constant total
    degree ``d = r_1 + ... + r_k``.  A coordinate whose ``x_j`` is a
    nonnegative integer has a finite range (``[x_j]_{r,q}`` vanishes for
    ``r > x_j``); if every coordinate is finite the sum is exact and the
    bound is 0.  Otherwise the sum stops once the geometric estimate
    ``2 S_d rho / (1 - rho)`` of the remaining shells drops below the
    tolerance, where ``rho`` is the larger of the observed shell ratio and
    the largest per-coordinate limit ratio.  Infinite sums are accepted
    for E211 only when ``0 < q < 1`` and for E212 only when ``q > 1``, and
    then every partial tail ``x_{j+1} + ... + x_{k+1}`` must be negative.  The reported bound
    adds a floating rounding allowance under the log backend.
    """
    _check_variant(variant, INVERSE)
    policy = policy or TruncationPolicy()
    q, n, xs, k = inst.q, inst.n, inst.xs, inst.k
    finite_cap = [int(xs[j]) if _is_nonneg_int(xs[j]) else None for j in range(k)]
    infinite = [j for j in range(k) if finite_cap[j] is None]
    rho_asym = 0.0
    if infinite:
        # A finite sum is an exact identity everywhere.  An infinite one
        # converges to the target only on the side of q = 1 where the
        # stated condition also makes every coordinate ratio < 1; on the
        # other side it still converges, but to a different number.
        below = q.log_value < 0
        sign = -1 if variant == "E211" else 1
        if not sign * float(xs[-1]) * q.log_value < 0:
            cond = "|q^-x_{k+1}| < 1" if variant == "E211" else "|q^x_{k+1}| < 1"
            raise DomainError(f"{variant} needs {cond}")
        if below != (variant == "E211"):
            side = "0 < q < 1" if variant == "E211" else "q > 1"
            raise DomainError(f"{variant} with non-integer x_j holds only for {side}")
        rho_asym = max(_coordinate_ratio(variant, q, xs, j) for j in infinite)
        if rho_asym >= 1:
            raise DomainError(f"asymptotic term ratio {rho_asym:.3g} >= 1; a partial "
                              "tail x_(j+1)+...+x_(k+1) has the wrong sign")

    one = q.one()
    total_x = inst.total
    falling = [_Prefix(lambda i, x=x: q_number(x - i, q), one) for x in xs[:k]]
    facts = _Prefix(lambda i: q_number(i + 1, q), one)
    rising_n = _Prefix(lambda i: q_number(n + i, q), one)     # [n+N-1]_{N}
    denom = _Prefix(lambda i: q_number(total_x - i, q), one)  # [X]_{N}
    # prefix products of the rising top [n+N-1]_N = prod_{i<N} [n+i]

    def term(rs: tuple[int, ...]) -> Scalar:
        sk = sum(rs)
        coef = rising_n[sk]
        for r in rs:
            coef = coef / facts[r]
        s = partial_sums(rs)
        if variant == "E211":
            e = sum((n + sk - s[j]) * (xs[j] - rs[j]) for j in range(k))
        else:
            z = inst.tails
            e = sum(rs[j] * (z[j] - sk + s[j] - n + 1) for j in range(k))
        prod = one
        for j in range(k):
            prod = prod * falling[j][rs[j]]
        if not prod:
            return q.zero()
        d = denom[n + sk]
        if not d:
            raise DomainError("[x_1+...+x_{k+1}]_{n+s_k,q} vanishes")
        return coef * q.pow(e) * prod / d

    def shell(d: int) -> list[Scalar]:
        out = []
        for rs in _shell_points(k, d, finite_cap):
            t = term(rs)
            if t:
                out.append(t)
        return out

    max_finite = sum(c for c in finite_cap if c is not None)
    all_terms: list[Scalar] = []
    shell_sums: list[Scalar] = []
    prev_abs = None
    bound = math.inf
    d = 0
    while True:
        terms = shell(d)
        all_terms.extend(terms)
        shell_sums.append(fsum_scalars(terms) if terms else q.zero())
        if not infinite and d >= max_finite:
            bound = 0.0
            break
        shell_abs = _abs_total(terms)
        if infinite and d > max_finite + 2 and prev_abs is not None and prev_abs:
            ratio = math.exp(min(shell_abs.log - prev_abs.log, 0.0))
            rho = max(rho_asym, ratio)
            if rho < 1:
                partial = LogFloat.of(abs(fsum_scalars(shell_sums)))
                est = shell_abs * LogFloat.of(2.0 * rho / (1.0 - rho))
                bound = float(est)
                scale = partial if partial.log > 0 else LogFloat.one()
                if est.log <= math.log(policy.tail_tolerance) + scale.log:
                    break
        prev_abs = shell_abs
        d += 1
        if d > policy.max_terms_per_index:
            raise TruncationError(
                f"tail bound {bound:.3g} not reached within "
                f"{policy.max_terms_per_index} shells", bound)
    value = fsum_scalars(all_terms) if all_terms else q.zero()
    if not q.exact:
        biggest = max((LogFloat.of(abs(t)) for t in all_terms), default=LogFloat.zero(),
                      key=lambda v: v.log)
        allowance = (biggest * LogFloat.of(len(all_terms) ** 0.5)
                     + LogFloat.of(abs(value))) * LogFloat.of(64 * 2.0 ** -52)
        bound += float(allowance)
    return value, bound


def _coordinate_ratio(variant: str, q: QBase, xs, j: int) -> float:
    """Limit of term(r + e_j) / term(r) as ``r_j`` grows with the rest fixed.

    The limit does not depend on the other indices.  With ``Y`` the sum of
    the ``x_i`` before ``j`` and ``z`` the sum after it, the four cases are
    ``q**-z`` / ``q**(Y-1)`` for E211 and ``q**(1-Y)`` / ``q**z`` for E212
    (``q < 1`` / ``q > 1``).
    """
    head = float(sum(xs[:j], 0))
    tail = float(sum(xs[j + 1:], 0))
    below = q.log_value < 0
    if variant == "E211":
        e = -tail if below else head - 1.0
    else:
        e = 1.0 - head if below else tail
    return math.exp(min(e * q.log_value, 1.0))


def _abs_total(terms: list[Scalar]) -> LogFloat:
    if not terms:
        return LogFloat.zero()
    return LogFloat.of(fsum_scalars([abs(t) for t in terms]))


def _shell_points(k: int, d: int, caps: list[int | None]) -> Iterator[tuple[int, ...]]:
    """k-tuples summing to exactly d with ``t_j <= caps[j]`` where capped."""
    if k == 1:
        if caps[0] is None or d <= caps[0]:
            yield (d,)
        return
    hi = d if caps[0] is None else min(d, caps[0])
    for first in range(hi + 1):
        for rest in _shell_points(k - 1, d - first, caps[1:]):
            yield (first,) + rest


# -- randomized checks ---------------------------------------------------------


@dataclass
class IdentityReport:
    """Outcome of one identity over a batch of random instances.

    ``max_error`` is the largest relative error under the log backend
    (finite identities) or the largest ``|sum - target|`` (inverse ones).
    ``failures`` counts exact mismatches, relative errors above the
    tolerance, and inverse errors above their tail bound;
    ``exact_failures`` is the share of exact mismatches.
    """

    identity: str
    instances: int = 0
    exact_checked: int = 0
    max_error: float = 0.0
    failures: int = 0
    exact_failures: int = 0

    @property
    def passed(self) -> bool:
        return self.instances > 0 and self.failures == 0


def _relative(a: Scalar, b: Scalar) -> float:
    fa, fb = to_float(a), to_float(b)
    scale = max(abs(fa), abs(fb))
    return 0.0 if scale == 0 else abs(to_float(a - b)) / scale


def _finite_pair(variant: str, n, xs, q: QBase, shifted_r=None) -> tuple[Scalar, Scalar]:
    if variant in CAUCHY_SHIFTED:
        return (cauchy_sum_shifted(shifted_r, n, xs, q, variant),
                cauchy_shifted_lhs(shifted_r, n, len(xs), q))
    inst = IdentityInstance(n, xs, q)
    if variant in VANDERMONDE:
        return vandermonde_sum(inst, variant), vandermonde_lhs(inst, variant)
    return cauchy_sum(inst, variant), cauchy_lhs(inst, variant)


def run_finite_suite(count: int = 200, seed: int = 0,
                     qs: Sequence[str] = ("3/10", "7/10", "3/2", "3"),
                     tolerance: float = 1e-9,
                     variants: Sequence[str] = FINITE_IDENTITIES) -> list[IdentityReport]:
    """Check each finite identity on ``count`` random instances.

    Instances have ``k <= 3`` and ``n <= 6``.  Half use integers
    ``0..6`` and are compared exactly and in the log backend; the rest use
    reals in ``(0, 6)`` and are compared in the log backend.  The shifted
    sums take integers only.
    """
    rng = random.Random(seed)
    reports = []
    for variant in variants:
        rep = IdentityReport(variant)
        for _ in range(count):
            k = rng.randint(1, 3)
            n = rng.randint(1, 6)
            qv = Fraction(rng.choice(list(qs)))
            shifted = variant in CAUCHY_SHIFTED
            integral = shifted or rng.random() < 0.5
            r = None
            if shifted:
                cuts = sorted(rng.randint(0, n) for _ in range(k))
                xs = tuple(b - a for a, b in zip([0] + cuts[:-1], cuts))
                r = n + rng.randint(0, 4)
            elif integral:
                xs = tuple(rng.randint(0, 6) for _ in range(k + 1))
            else:
                xs = tuple(round(rng.uniform(0.0, 6.0), 6) for _ in range(k + 1))
            if integral:
                lhs, rhs = _finite_pair(variant, n, xs, QBase.of(qv, exact=True), r)
                rep.exact_checked += 1
                if lhs != rhs:
                    rep.failures += 1
                    rep.exact_failures += 1
            lhs, rhs = _finite_pair(variant, n, xs, QBase.of(qv, exact=False), r)
            err = _relative(lhs, rhs)
            rep.max_error = max(rep.max_error, err)
            if not err <= tolerance:
                rep.failures += 1
            rep.instances += 1
        reports.append(rep)
    return reports


def _inverse_instance(rng: random.Random, variant: str) -> IdentityInstance:
    """Random instance inside the convergence region of ``variant``.

    Every partial tail ``x_{j+1} + ... + x_{k+1}`` is at most -1 so the
    series converges at a reasonable rate; the total stays away from
    integers so no denominator vanishes.
    """
    k = rng.randint(1, 2)
    n = rng.randint(1, 4)
    q = QBase.of(rng.choice([0.3, 0.7]) if variant == "E211" else rng.choice([1.5, 3.0]))
    while True:
        xs = [round(-rng.uniform(1.0, 3.0), 4)]
        for _ in range(k - 1):
            xs.insert(0, round(rng.uniform(-3.0, -1.0 - xs[0]), 4))
        if rng.random() < 0.3:
            xs.insert(0, rng.randint(0, 3))
        else:
            xs.insert(0, round(rng.uniform(-3.0, 3.0), 4))
        total = sum(xs)
        if abs(total - round(total)) > 1e-3:
            return IdentityInstance(n, tuple(xs), q)


def run_inverse_suite(count: int = 50, seed: int = 0,
                      policy: TruncationPolicy | None = None) -> list[IdentityReport]:
    """Truncated inverse sums against ``1/[x_{k+1}]_{n,q}`` (``k <= 2``, ``n <= 4``).

    An instance fails when the error exceeds the reported tail bound.
    """
    rng = random.Random(seed)
    reports = {v: IdentityReport(v) for v in INVERSE}
    for i in range(count):
        variant = INVERSE[i % len(INVERSE)]
        inst = _inverse_instance(rng, variant)
        value, bound = inverse_vandermonde_sum(inst, variant, policy)
        err = abs(to_float(value - inverse_vandermonde_lhs(inst)))
        rep = reports[variant]
        rep.instances += 1
        rep.max_error = max(rep.max_error, err)
        if not err <= bound:
            rep.failures += 1
    return list(reports.values())
