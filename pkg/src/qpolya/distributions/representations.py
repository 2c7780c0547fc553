"""Conditioning independent Bernoulli blocks on their total.

Success chances that move geometrically in ``q`` split a run of trials
into blocks whose counts are q-binomial (fixed trials) or negative
q-binomial (fixed successes).  Conditioned on the overall total the
block counts follow the q-hypergeometric and negative q-hypergeometric
laws, whatever the value of ``theta``.
"""

from __future__ import annotations

import math
from typing import Sequence

from ..errors import DomainError
from ..qcore import QBase, q_binomial
from ..scalar import Scalar

__all__ = [
    "check_negative_regime",
    "conditional_given_sum_negqbinomial",
    "conditional_given_sum_qbinomial",
    "negqbinomial_block_pmf",
    "negqbinomial_total_pmf",
    "qbinomial_block_pmf",
    "qbinomial_total_pmf",
]


def _theta(theta, q: QBase) -> Scalar:
    t = q.lift(theta)
    if not t > 0:
        raise DomainError(f"theta must be positive, got {theta}")
    return t


def qbinomial_block_pmf(size: int, offset: int, theta, q: QBase, x: int) -> Scalar:
    """Successes among trials ``offset+1 .. offset+size``.

    Trial ``i`` succeeds with chance ``theta q**(i-1) / (1 + theta q**(i-1))``;
    the count is q-binomial with ``theta`` replaced by ``theta q**offset``.
    """
    if not 0 <= x <= size:
        return q.zero()
    t = _theta(theta, q) * q.pow(offset)
    norm = q.one()
    for i in range(size):
        norm = norm * (1 + t * q.pow(i))
    return q_binomial(size, x, q) * t ** x * q.pow(math.comb(x, 2)) / norm


def qbinomial_total_pmf(size: int, theta, q: QBase, n: int) -> Scalar:
    return qbinomial_block_pmf(size, 0, theta, q, n)


def _full(x: Sequence[int], k: int, n: int) -> tuple[int, ...]:
    x = tuple(int(v) for v in x)
    if len(x) == k + 1:
        if sum(x) != n:
            raise DomainError(f"block counts {x} do not add up to {n}")
        return x
    if len(x) != k:
        raise DomainError(f"expected {k} or {k + 1} coordinates, got {len(x)}")
    return x + (n - sum(x),)


def conditional_given_sum_qbinomial(block_sizes: Sequence[int], theta, q: QBase,
                                    n: int, x: Sequence[int]) -> Scalar:
    """``P(X_1 = x_1, ..., X_k = x_k | X_1 + ... + X_{k+1} = n)``.

    Built as the product of the independent block probabilities divided by
    the probability of the total.
    """
    sizes = tuple(int(r) for r in block_sizes)
    k = len(sizes) - 1
    r = sum(sizes)
    if k < 1:
        raise DomainError("need at least two blocks")
    if not 0 <= n <= r:
        raise DomainError(f"total {n} outside 0..{r}")
    full = _full(x, k, n)
    if any(v < 0 for v in full):
        return q.zero()
    value = q.one()
    offset = 0
    for size, v in zip(sizes, full):
        value = value * qbinomial_block_pmf(size, offset, theta, q, v)
        offset += size
    return value / qbinomial_total_pmf(r, theta, q, n)


def check_negative_regime(theta, q: QBase, r: int) -> Scalar:
    """Validate ``0 < theta < 1`` and, for ``q > 1``, ``r <= -log(theta)/log(q)``."""
    t = _theta(theta, q)
    if not t < 1:
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    if q.log_value > 0 and r * q.log_value > -math.log(float(t)):
        raise DomainError(
            f"for q > 1 the number of successes r = {r} must not exceed "
            f"-log(theta)/log(q) = {-math.log(float(t)) / q.log_value:.6g}")
    return t


def negqbinomial_block_pmf(size: int, offset: int, theta, q: QBase, w: int) -> Scalar:
    """Failures between success ``offset`` and success ``offset + size``.

    After ``j - 1`` successes the next trial succeeds with chance
    ``1 - theta q**(j-1)``; the count is negative q-binomial with
    ``theta`` replaced by ``theta q**offset``.
    """
    if w < 0:
        return q.zero()
    t = check_negative_regime(theta, q, offset + size) * q.pow(offset)
    norm = q.one()
    for i in range(size):
        norm = norm * (1 - t * q.pow(i))
    return q_binomial(size + w - 1, w, q) * t ** w * norm


def negqbinomial_total_pmf(size: int, theta, q: QBase, n: int) -> Scalar:
    return negqbinomial_block_pmf(size, 0, theta, q, n)


def conditional_given_sum_negqbinomial(block_sizes: Sequence[int], theta, q: QBase,
                                       n: int, w: Sequence[int]) -> Scalar:
    """``P(W_1 = w_1, ..., W_k = w_k | W_1 + ... + W_{k+1} = n)``."""
    sizes = tuple(int(r) for r in block_sizes)
    k = len(sizes) - 1
    r = sum(sizes)
    if k < 1:
        raise DomainError("need at least two blocks")
    if n < 0:
        raise DomainError("the total must be nonnegative")
    check_negative_regime(theta, q, r)
    full = _full(w, k, n)
    if any(v < 0 for v in full):
        return q.zero()
    value = q.one()
    offset = 0
    for size, v in zip(sizes, full):
        value = value * negqbinomial_block_pmf(size, offset, theta, q, v)
        offset += size
    return value / negqbinomial_total_pmf(r, theta, q, n)
