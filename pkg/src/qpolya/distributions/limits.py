"""Large-urn limits: q-multinomial laws of the second kind."""

from __future__ import annotations

import math
from typing import Sequence

from ..errors import DomainError, SupportTooLarge
from ..qcore import QBase, boxed_tuples, bounded_compositions, partial_sums, q_multinomial, q_number
from ..scalar import LogFloat, Scalar
from .params import LimitKind, LimitParams, PmfTable, UrnSpec

__all__ = [
    "lambda_rates",
    "limit_params_for_urn",
    "negative_q_multinomial_2nd_pmf",
    "negative_q_multinomial_2nd_table",
    "q_multinomial_2nd_pmf",
    "q_multinomial_2nd_table",
    "theta_rates",
]


def theta_rates(counts: Sequence[int], q: QBase) -> list[Scalar]:
    """``theta_j = [r - s_j]_{1/q} / [r - s_{j-1}]_{1/q}`` at the given urn.

    These ratios tend to the rates of the ``0 < q < 1`` limit as the urn
    grows; evaluated at a finite urn they give the matched approximation.
    """
    inv = q.inverse()
    r = sum(counts)
    s = [0] + partial_sums(counts)
    return [q_number(r - s[j + 1], inv) / q_number(r - s[j], inv)
            for j in range(len(counts) - 1)]


def lambda_rates(counts: Sequence[int], q: QBase) -> list[Scalar]:
    """``lambda_j = [r_j]_q / [r - s_{j-1}]_q`` at the given urn (``q > 1``)."""
    r = sum(counts)
    s = [0] + partial_sums(counts)
    return [q_number(counts[j], q) / q_number(r - s[j], q) for j in range(len(counts) - 1)]


def limit_params_for_urn(spec: UrnSpec, nu: int | None = None) -> LimitParams:
    """Rates matched to a finite urn, in the regime fixed by ``q``."""
    if spec.q.log_value < 0:
        return LimitParams(LimitKind.THETA, tuple(theta_rates(spec.counts, spec.q)),
                           spec.q, spec.m, nu)
    return LimitParams(LimitKind.LAMBDA, tuple(lambda_rates(spec.counts, spec.q)),
                       spec.q, spec.m, nu)


def _rate(lim: LimitParams, j: int) -> Scalar:
    t = lim.rates[j]
    if isinstance(t, LogFloat):
        if lim.q.exact:
            raise DomainError("exact evaluation needs rational rates")
        return t
    return lim.q.lift(t)


def _pochhammer(rate: Scalar, q: QBase, step: int, count: int) -> Scalar:
    """``prod_{i=1..count} (1 - rate * q**(step*(i-1)))``."""
    out = q.one()
    for i in range(count):
        out = out * (1 - rate * q.pow(step * i))
    return out


def _outcome(x, k: int) -> tuple[int, ...]:
    x = tuple(int(v) for v in x)
    if len(x) != k:
        raise DomainError(f"outcome has {len(x)} coordinates, expected {k}")
    return x


def q_multinomial_2nd_pmf(lim: LimitParams, n: int, x: Sequence[int]) -> Scalar:
    """Limit of the n-draw law as the urn grows.

    ``THETA``: ``[n; x]_{q^m} prod_j theta_j**(n-y_j) prod_{i<=x_j} (1 - theta_j q**(m(i-1)))``.
    ``LAMBDA``: ``[n; x]_{q^-m} prod_j lambda_j**x_j prod_{i<=n-y_j} (1 - lambda_j q**(-m(i-1)))``.
    """
    lim.check_draws(n)
    q, m, k = lim.q, lim.m, lim.k
    x = _outcome(x, k)
    if any(v < 0 for v in x) or sum(x) > n:
        return q.zero()
    y = partial_sums(x)
    if lim.kind is LimitKind.THETA:
        value = q_multinomial(n, x, q.power(m))
        for j in range(k):
            t = _rate(lim, j)
            value = value * t ** (n - y[j]) * _pochhammer(t, q, m, x[j])
    else:
        value = q_multinomial(n, x, q.power(-m))
        for j in range(k):
            lam = _rate(lim, j)
            value = value * lam ** x[j] * _pochhammer(lam, q, -m, n - y[j])
    return value


def negative_q_multinomial_2nd_pmf(lim: LimitParams, n: int, w: Sequence[int]) -> Scalar:
    """Limit of the inverse law (counts before the n-th last-colour draw).

    ``THETA``: ``[n+u_k-1; w]_{q^m} prod_j theta_j**(n+u_k-u_j) q**(m w_j) prod_{i<=w_j} (1 - theta_j q**(m(i-1)))``.
    ``LAMBDA``: ``[n+u_k-1; w]_{q^-m} prod_j lambda_j**w_j prod_{i<=n+u_k-u_j} (1 - lambda_j q**(-m(i-1)))``.
    """
    if n < 1:
        raise DomainError("the inverse law needs n >= 1")
    q, m, k = lim.q, lim.m, lim.k
    w = _outcome(w, k)
    if any(v < 0 for v in w):
        return q.zero()
    u = partial_sums(w)
    top = n + u[-1] - 1
    if lim.kind is LimitKind.THETA:
        value = q_multinomial(top, w, q.power(m))
        for j in range(k):
            t = _rate(lim, j)
            value = value * t ** (n + u[-1] - u[j]) * q.pow(m * w[j]) * _pochhammer(t, q, m, w[j])
    else:
        value = q_multinomial(top, w, q.power(-m))
        for j in range(k):
            lam = _rate(lim, j)
            value = value * lam ** w[j] * _pochhammer(lam, q, -m, n + u[-1] - u[j])
    return value


def q_multinomial_2nd_table(lim: LimitParams, n: int, cap: int = 1_000_000) -> PmfTable:
    size = math.comb(n + lim.k, lim.k)
    if size > cap:
        raise SupportTooLarge(f"{size} outcomes exceed the cap {cap}")
    support = list(bounded_compositions(lim.k, n))
    probs = [q_multinomial_2nd_pmf(lim, n, x) for x in support]
    return PmfTable.build(support, probs, meta={"law": "qmult2", "n": n, "k": lim.k, "m": lim.m})


def negative_q_multinomial_2nd_table(lim: LimitParams, n: int, wmax: int,
                                     cap: int = 1_000_000) -> PmfTable:
    """The box ``0 <= w_j <= wmax``; the left-out mass is ``1 - sum``."""
    size = (wmax + 1) ** lim.k
    if size > cap:
        raise SupportTooLarge(f"{size} outcomes exceed the cap {cap}")
    support = list(boxed_tuples([wmax] * lim.k))
    probs = [negative_q_multinomial_2nd_pmf(lim, n, w) for w in support]
    table = PmfTable.build(support, probs, truncated=True,
                           meta={"law": "neg-qmult2", "n": n, "k": lim.k, "m": lim.m,
                                 "wmax": wmax})
    table.tail_bound = table.normalization_defect
    return table
