"""The multivariate q-Polya law of the colour counts in n q-drawings."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from ..errors import DomainError, InfeasibleError, SupportTooLarge, UnvalidatedParameterError
from ..qcore import (
    QBase,
    bounded_compositions,
    partial_sums,
    q_binomial,
    q_factorial,
    q_factorial_order,
    q_multinomial,
    q_number,
)
from ..scalar import Scalar
from .params import PmfTable, PolyaParams, UrnSpec

__all__ = [
    "DEFAULT_SUPPORT_CAP",
    "color_draw_prob",
    "conditional_draw_prob",
    "conditional_params",
    "marginal_params",
    "multinomial_reduction_pmf",
    "negative_qhypergeometric_pmf",
    "q_uniform_draw_pmf",
    "qhypergeometric_pmf",
    "qpolya_pmf",
    "qpolya_table",
    "urn_law_table",
    "urn_table",
]

DEFAULT_SUPPORT_CAP = 1_000_000


def q_uniform_draw_pmf(position: int, r: int, q: QBase) -> Scalar:
    """Chance that a q-drawing from ``r`` balls picks ball ``position``."""
    if not 1 <= position <= r:
        raise DomainError(f"position {position} outside 1..{r}")
    return q.pow(position - 1) / q_number(r, q)


def color_draw_prob(spec: UrnSpec, color: int) -> Scalar:
    """First-draw probability ``q**s_{v-1} [r_v]_q / [r]_q`` of colour ``v``."""
    if not 1 <= color <= spec.k + 1:
        raise DomainError(f"colour {color} outside 1..{spec.k + 1}")
    q = spec.q
    return q.pow(spec.offset(color)) * q_number(spec.counts[color - 1], q) / q_number(spec.total, q)


def conditional_draw_prob(spec: UrnSpec, i: int, color: int, j_prev: int,
                          i_prev: int) -> Scalar:
    """Chance that draw ``i`` has colour ``v`` given the history counts.

    ``j_prev`` balls of colour ``v`` and ``i_prev`` balls of the colours
    before it were drawn in the first ``i - 1`` drawings.  The value is
    ``q**(s_{v-1} + m i_prev) (1 - q**(r_v + m j_prev)) / (1 - q**(r + m(i-1)))``.
    A colour that has run out gets probability 0.
    """
    if not 1 <= color <= spec.k + 1:
        raise DomainError(f"colour {color} outside 1..{spec.k + 1}")
    if i < 1 or j_prev < 0 or i_prev < 0 or i_prev + j_prev > i - 1:
        raise DomainError(f"inconsistent history i={i}, j_prev={j_prev}, i_prev={i_prev}")
    q, m = spec.q, spec.m
    current = spec.counts[color - 1] + m * j_prev
    total = spec.total + m * (i - 1)
    if current < 0 or total < 1:
        raise DomainError(f"history is infeasible: colour count {current}, urn total {total}")
    ahead = spec.offset(color) + m * i_prev
    if ahead < 0:
        raise DomainError("history is infeasible: negative count ahead of the colour")
    if current == 0:
        return q.zero()
    return q.pow(ahead) * q_number(current, q) / q_number(total, q)


def _support_ok(params: PolyaParams, full: Sequence[int]) -> bool:
    """Under removal an urn colour cannot be drawn below zero balls."""
    counts = params.counts() if params.validated else None
    if counts is None or params.m > 0:
        return True
    return all(r + params.m * x >= 0 for r, x in zip(counts, full))


def _check_outcome(params: PolyaParams, x) -> tuple[int, ...] | None:
    x = tuple(int(v) for v in x)
    if len(x) != params.k:
        raise DomainError(f"outcome has {len(x)} coordinates, expected {params.k}")
    if any(v < 0 for v in x) or sum(x) > params.n:
        return None
    return x


def _denominator(alpha, n: int, b: QBase) -> Scalar:
    d = q_factorial_order(alpha, n, b)
    if not d:
        raise InfeasibleError(f"the urn cannot supply {n} drawings (it empties first)")
    return d


def _guard(params: PolyaParams, value: Scalar) -> Scalar:
    if not params.validated and value < 0:
        raise UnvalidatedParameterError(
            f"free-form parameters give a negative probability {float(value):.6g}")
    return value


def qpolya_pmf(params: PolyaParams, x: Sequence[int], form: str = "multinomial") -> Scalar:
    """``P(X_1 = x_1, ..., X_k = x_k)`` for the k-variate q-Polya law.

    ``form="multinomial"`` uses the q-multinomial with falling factorials
    and ``form="binomial"`` the product of generalised q-binomials; both
    are in base ``q**-m`` with weight ``q**(-m sum_j (n-y_j)(a_j-x_j))``.
    Outcomes off the support give 0.
    """
    if form not in ("multinomial", "binomial"):
        raise DomainError(f"unknown form {form!r}")
    b = params.base
    x = _check_outcome(params, x)
    if x is None:
        return b.zero()
    n, alphas = params.n, params.alphas
    full = x + (n - sum(x),)
    if not _support_ok(params, full):
        return b.zero()
    y = partial_sums(x)
    weight = b.pow(sum((n - y[j]) * (alphas[j] - x[j]) for j in range(params.k)))
    if form == "multinomial":
        value = q_multinomial(n, x, b) * weight
        for a, xj in zip(params.all_alphas, full):
            value = value * q_factorial_order(a, xj, b)
        value = value / _denominator(params.alpha, n, b)
    else:
        _denominator(params.alpha, n, b)
        value = weight
        for a, xj in zip(params.all_alphas, full):
            value = value * q_binomial(a, xj, b)
        value = value / q_binomial(params.alpha, n, b)
    return _guard(params, value)


def _support_size(k: int, n: int) -> int:
    return math.comb(n + k, k)


def qpolya_table(params: PolyaParams, cap: int = DEFAULT_SUPPORT_CAP) -> PmfTable:
    """All outcomes with ``sum(x) <= n`` in lexicographic order.

    Shares the falling factorials between outcomes, so it is much faster
    than calling :func:`qpolya_pmf` point by point.
    """
    k, n = params.k, params.n
    size = _support_size(k, n)
    if size > cap:
        raise SupportTooLarge(f"{size} outcomes exceed the cap {cap}")
    b = params.base
    denom = _denominator(params.alpha, n, b)
    facts = [q_factorial(i, b) for i in range(n + 1)]
    falling = []
    for a in params.all_alphas:
        row = [b.one()]
        for i in range(n):
            row.append(row[-1] * q_number(a - i, b))
        falling.append(row)
    lead = facts[n] / denom
    support, probs = [], []
    for x in bounded_compositions(k, n):
        full = x + (n - sum(x),)
        support.append(x)
        if not _support_ok(params, full):
            probs.append(b.zero())
            continue
        y = partial_sums(x)
        e = sum((n - y[j]) * (params.alphas[j] - x[j]) for j in range(k))
        value = lead * b.pow(e)
        for j, xj in enumerate(full):
            value = value * falling[j][xj] / facts[xj]
        probs.append(_guard(params, value))
    meta = {"law": "qpolya", "n": n, "k": k, "m": params.m}
    return PmfTable.build(support, probs, meta=meta)


def marginal_params(params: PolyaParams, keep: int) -> PolyaParams:
    """Law of ``(X_1, ..., X_keep)``: same ``n`` and ``alpha``, first alphas."""
    if not 1 <= keep <= params.k:
        raise DomainError(f"keep must be in 1..{params.k}")
    return params.replace(alphas=params.alphas[:keep])


def conditional_params(params: PolyaParams, given: Sequence[int], span: int) -> PolyaParams:
    """Law of ``(X_v, ..., X_{v+span-1})`` given ``X_1..X_{v-1} = given``.

    ``v = len(given) + 1``.  The conditional law is again q-Polya, with the
    draws that remain (``n - sum(given)``), the alphas ``a_v..a_{v+span-1}``
    and ``alpha - a_1 - ... - a_{v-1}``.
    """
    given = tuple(int(g) for g in given)
    v = len(given) + 1
    if v > params.k:
        raise DomainError("nothing left to condition on")
    if not 1 <= span <= params.k - v + 1:
        raise DomainError(f"span must be in 1..{params.k - v + 1}")
    if any(g < 0 for g in given) or sum(given) > params.n:
        raise DomainError(f"given values {given} are infeasible for n = {params.n}")
    counts = params.counts() if params.validated else None
    if counts is not None and params.m < 0:
        if any(r + params.m * g < 0 for r, g in zip(counts, given)):
            raise DomainError(f"given values {given} exceed what the urn holds")
    head = sum(params.alphas[: v - 1], Fraction(0))
    return params.replace(n=params.n - sum(given),
                          alphas=params.alphas[v - 1: v - 1 + span],
                          alpha=params.alpha - head)


def qhypergeometric_pmf(spec: UrnSpec, n: int, x: Sequence[int]) -> Scalar:
    """q-drawings without replacement (``m = -1``), in base ``q``."""
    if spec.m != -1:
        raise DomainError("the q-hypergeometric law needs m = -1")
    q, r, k = spec.q, spec.total, spec.k
    if not 0 <= n <= r:
        raise DomainError(f"cannot draw {n} balls from {r} without replacement")
    x = tuple(int(v) for v in x)
    if len(x) != k:
        raise DomainError(f"outcome has {len(x)} coordinates, expected {k}")
    full = x + (n - sum(x),)
    if any(v < 0 for v in full) or any(v > c for v, c in zip(full, spec.counts)):
        return q.zero()
    y = partial_sums(x)
    weight = q.pow(sum((n - y[j]) * (spec.counts[j] - x[j]) for j in range(k)))
    value = q_multinomial(n, x, q) * weight
    for c, v in zip(spec.counts, full):
        value = value * q_factorial_order(c, v, q)
    return value / q_factorial_order(r, n, q)


def negative_qhypergeometric_pmf(spec: UrnSpec, n: int, x: Sequence[int]) -> Scalar:
    """q-drawings with one extra ball added per draw (``m = +1``), base ``q``."""
    if spec.m != 1:
        raise DomainError("the negative q-hypergeometric law needs m = 1")
    q, r, k = spec.q, spec.total, spec.k
    if n < 0:
        raise DomainError("n must be nonnegative")
    x = tuple(int(v) for v in x)
    if len(x) != k:
        raise DomainError(f"outcome has {len(x)} coordinates, expected {k}")
    full = x + (n - sum(x),)
    if any(v < 0 for v in full):
        return q.zero()
    y = partial_sums(x)
    weight = q.pow(sum(spec.counts[j] * (n - y[j]) for j in range(k)))
    value = q_multinomial(n, x, q) * weight
    for c, v in zip(spec.counts, full):
        value = value * q_factorial_order(c + v - 1, v, q)
    return value / q_factorial_order(r + n - 1, n, q)


def multinomial_reduction_pmf(spec: UrnSpec, n: int, x: Sequence[int]) -> Scalar:
    """``m = 0``: a classical multinomial with the first-draw probabilities."""
    q = spec.q
    x = tuple(int(v) for v in x)
    if len(x) != spec.k:
        raise DomainError(f"outcome has {len(x)} coordinates, expected {spec.k}")
    full = x + (n - sum(x),)
    if any(v < 0 for v in full):
        return q.zero()
    coef = math.factorial(n)
    for v in full:
        coef //= math.factorial(v)
    value = q.lift(coef)
    for color, v in enumerate(full, start=1):
        if v:
            value = value * color_draw_prob(spec, color) ** v
    return value


def urn_table(spec: UrnSpec, n: int, cap: int = DEFAULT_SUPPORT_CAP) -> PmfTable:
    """Table of the n-draw law of an urn, for any ``m`` including 0."""
    if spec.m != 0:
        return qpolya_table(PolyaParams.from_urn(spec, n), cap=cap)
    size = _support_size(spec.k, n)
    if size > cap:
        raise SupportTooLarge(f"{size} outcomes exceed the cap {cap}")
    support = list(bounded_compositions(spec.k, n))
    probs = [multinomial_reduction_pmf(spec, n, x) for x in support]
    return PmfTable.build(support, probs, meta={"law": "multinomial", "n": n, "k": spec.k, "m": 0})


def urn_law_table(spec: UrnSpec, n: int) -> PmfTable:
    """The n-draw law obtained by stepping the urn forward draw by draw.

    Each state is the vector of colour counts drawn so far; the
    one-draw probabilities come from :func:`conditional_draw_prob`.  This
    uses nothing from the closed form and serves as a cross-check.
    """
    q, k = spec.q, spec.k
    layer: dict[tuple[int, ...], Scalar] = {(0,) * (k + 1): q.one()}
    for i in range(1, n + 1):
        nxt: dict[tuple[int, ...], Scalar] = {}
        for state, p in layer.items():
            if not p:
                continue
            if spec.total + spec.m * (i - 1) < 1:
                raise InfeasibleError(f"the urn is empty before draw {i}", draw_index=i)
            for v in range(k + 1):
                if spec.counts[v] + spec.m * state[v] <= 0:
                    continue
                step = conditional_draw_prob(spec, i, v + 1, state[v], sum(state[:v]))
                after = state[v] + 1
                if spec.counts[v] + spec.m * after < 0:
                    if step:
                        raise InfeasibleError(
                            f"draw {i} would leave colour {v + 1} with a negative count",
                            draw_index=i)
                    continue
                key = state[:v] + (after,) + state[v + 1:]
                nxt[key] = nxt[key] + p * step if key in nxt else p * step
        layer = nxt
    support = list(bounded_compositions(k, n))
    zero = q.zero()
    probs = [layer.get(x + (n - sum(x),), zero) for x in support]
    return PmfTable.build(support, probs, meta={"law": "urn-walk", "n": n, "k": k, "m": spec.m})
