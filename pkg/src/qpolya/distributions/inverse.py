"""The multivariate inverse q-Polya law: colour counts before the n-th
draw of the last colour."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from scipy import stats

from ..errors import DomainError, SupportTooLarge, UnvalidatedParameterError
from ..qcore import boxed_tuples, partial_sums, q_factorial_order, q_multinomial, q_number
from ..scalar import Scalar, fsum_scalars, to_float
from .params import PmfTable, PolyaParams
from .polya import qpolya_pmf

__all__ = [
    "closing_draw_prob",
    "inverse_qpolya_chained",
    "inverse_qpolya_pmf",
    "inverse_qpolya_table",
    "inverse_tail_bound",
]


def _outcome(params: PolyaParams, w) -> tuple[int, ...]:
    w = tuple(int(v) for v in w)
    if len(w) != params.k:
        raise DomainError(f"outcome has {len(w)} coordinates, expected {params.k}")
    return w


def _removal_infeasible(params: PolyaParams, w: Sequence[int]) -> bool:
    counts = params.counts() if params.validated else None
    if counts is None or params.m > 0:
        return False
    full = tuple(w) + (params.n,)
    return any(r + params.m * x < 0 for r, x in zip(counts, full))


def inverse_qpolya_pmf(params: PolyaParams, w: Sequence[int]) -> Scalar:
    """``P(W_1 = w_1, ..., W_k = w_k)``.

    Closed form in base ``b = q**-m``::

        [n+u_k-1; w_1..w_k]_b  b**(sum_j (n+u_k-u_j)(a_j-w_j))
            * prod_j [a_j]_{w_j,b} [a_{k+1}]_{n,b} / [a]_{n+u_k,b}

    with ``u_j = w_1 + ... + w_j``.  Infeasible outcomes under removal
    give 0.
    """
    if params.n < 1:
        raise DomainError("the inverse law needs n >= 1")
    b = params.base
    w = _outcome(params, w)
    if any(v < 0 for v in w) or _removal_infeasible(params, w):
        return b.zero()
    n, k = params.n, params.k
    u = partial_sums(w)
    top = n + u[-1]
    weight = b.pow(sum((top - u[j]) * (params.alphas[j] - w[j]) for j in range(k)))
    value = q_multinomial(top - 1, w, b) * weight
    for a, x in zip(params.alphas, w):
        value = value * q_factorial_order(a, x, b)
    value = value * q_factorial_order(params.alpha_last, n, b)
    denom = q_factorial_order(params.alpha, top, b)
    if not denom:
        return b.zero() if not value else _raise_empty(top)
    value = value / denom
    if not params.validated and value < 0:
        raise UnvalidatedParameterError(
            f"free-form parameters give a negative probability {float(value):.6g}")
    return value


def _raise_empty(draws: int):
    raise DomainError(f"the urn empties before draw {draws}")


def closing_draw_prob(params: PolyaParams, w: Sequence[int]) -> Scalar:
    """Chance that draw ``n + u_k`` is the last colour, given the counts so far.

    ``b**(beta_k - u_k) [a_{k+1} - n + 1]_b / [a - n - u_k + 1]_b``: the
    history has ``w`` and ``n - 1`` balls of the last colour.
    """
    b = params.base
    w = _outcome(params, w)
    n = params.n
    u = sum(w)
    beta_k = sum(params.alphas, Fraction(0))
    denom = q_number(params.alpha - n - u + 1, b)
    if not denom:
        raise DomainError(f"the urn is empty at draw {n + u}")
    return b.pow(beta_k - u) * q_number(params.alpha_last - n + 1, b) / denom


def inverse_qpolya_chained(params: PolyaParams, w: Sequence[int]) -> Scalar:
    """The same probability assembled as (n-draw law at ``n+u_k-1`` draws)
    times (closing-draw probability)."""
    w = _outcome(params, w)
    if any(v < 0 for v in w):
        return params.base.zero()
    before = params.replace(n=params.n + sum(w) - 1)
    head = qpolya_pmf(before, w)
    if not head:
        return head
    return head * closing_draw_prob(params, w)


def inverse_tail_bound(params: PolyaParams, wmax: int) -> tuple[float, bool]:
    """Bound on the probability that some ``W_j`` exceeds ``wmax``.

    Returns ``(bound, proper)``.  ``proper`` is False when the stopping
    time can be infinite (``0 < q < 1`` with ``m > 0``): then the bound
    covers only runs that do stop outside the box.

    * ``m < 0``: the support is finite; 0 once the box covers it.
    * ``q > 1``, ``m > 0``: every draw is the last colour with chance at
      least ``1 - q**-r_{k+1}``, so the total count is dominated by a
      negative binomial.
    * ``0 < q < 1``, ``m > 0``: a last-colour draw after ``d`` other draws
      has chance at most ``q**(s_k + m d)``; summing over ``d > wmax``.
    """
    counts = params.counts() if params.validated else None
    if counts is None:
        raise DomainError("tail bounds need urn parameters")
    m, q = params.m, params.q
    s_k = sum(counts[:-1])
    if m < 0:
        caps = [r // -m for r in counts[:-1]]
        if all(c <= wmax for c in caps):
            return 0.0, True
        return _finite_remainder(params, wmax, caps), True
    if q.log_value > 0:
        pi = -math.expm1(-counts[-1] * q.log_value)
        return float(stats.nbinom.sf(wmax, params.n, pi)), True
    e = (s_k + m * (wmax + 1)) * q.log_value
    bound = math.exp(e) / -math.expm1(m * q.log_value)
    return min(bound, 1.0), False


def _finite_remainder(params: PolyaParams, wmax: int, caps: list[int]) -> float:
    rest = [inverse_qpolya_pmf(params, w) for w in boxed_tuples(caps)
            if any(v > wmax for v in w)]
    if not rest:
        return 0.0
    return abs(to_float(fsum_scalars(rest)))


def inverse_qpolya_table(params: PolyaParams, wmax: int, cap: int = 1_000_000) -> PmfTable:
    """The box ``0 <= w_j <= wmax`` with a bound on the mass left out.

    ``tail_bound`` adds a rounding allowance for the floating backend.
    For a law that may never stop (``proper`` False) the defect also
    contains the never-stopping mass and is not covered by the bound.
    """
    size = (wmax + 1) ** params.k
    if size > cap:
        raise SupportTooLarge(f"{size} outcomes exceed the cap {cap}")
    support = list(boxed_tuples([wmax] * params.k))
    probs = [inverse_qpolya_pmf(params, w) for w in support]
    bound, proper = inverse_tail_bound(params, wmax)
    if not params.q.exact:
        bound += 64 * 2.0 ** -52 * max(1, len(probs))
    meta = {"law": "inverse-qpolya", "n": params.n, "k": params.k, "m": params.m,
            "wmax": wmax}
    return PmfTable.build(support, probs, truncated=True, tail_bound=bound,
                          proper=proper, meta=meta)
