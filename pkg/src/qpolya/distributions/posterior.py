"""Bayesian recovery of class sizes from a q-sample without replacement.

A population of ``r`` people in ``k+1`` classes has unknown class sizes
``R``; a sample of ``n`` is q-drawn without replacement and shows ``x``.
With the discrete q-uniform prior on ``R`` the posterior has a closed
form, provided here next to the pieces needed to recompute it by Bayes'
rule.
"""

from __future__ import annotations

from typing import Iterator, Sequence

from ..errors import DomainError
from ..qcore import QBase, bounded_compositions, partial_sums, q_binomial
from ..scalar import Scalar
from .params import PmfTable, UrnSpec
from .polya import qhypergeometric_pmf

__all__ = [
    "hypotheses",
    "posterior_r_given_x",
    "posterior_table",
    "q_uniform_prior",
    "sample_marginal_pmf",
    "sample_likelihood",
]


def _full(parts: Sequence[int], total: int) -> tuple[int, ...]:
    parts = tuple(int(v) for v in parts)
    return parts + (total - sum(parts),)


def q_uniform_prior(r_total: int, r_hypothesis: Sequence[int], q: QBase) -> Scalar:
    """``prod_j q**((k-j+1) r_j) / [r+k choose k]_q`` over ``j = 1..k+1``."""
    full = _full(r_hypothesis, r_total)
    k = len(full) - 1
    if any(v < 0 for v in full):
        return q.zero()
    weight = q.pow(sum((k - j) * v for j, v in enumerate(full)))
    return weight / q_binomial(r_total + k, k, q)


def sample_likelihood(r_total: int, n: int, x: Sequence[int],
                      r_hypothesis: Sequence[int], q: QBase) -> Scalar:
    """The q-hypergeometric chance of sample ``x`` given class sizes."""
    full = _full(r_hypothesis, r_total)
    if any(v < 0 for v in full):
        return q.zero()
    return qhypergeometric_pmf(UrnSpec(full, -1, q), n, x)


def sample_marginal_pmf(n: int, x: Sequence[int], q: QBase) -> Scalar:
    """Prior-averaged chance of the sample: q-uniform on compositions of ``n``."""
    full = _full(x, n)
    k = len(full) - 1
    if any(v < 0 for v in full):
        return q.zero()
    return q.pow(sum((k - j) * v for j, v in enumerate(full))) / q_binomial(n + k, k, q)


def posterior_r_given_x(r_total: int, n: int, x: Sequence[int],
                        r_hypothesis: Sequence[int], q: QBase) -> Scalar:
    """``P(R = r | X = x)`` under the q-uniform prior.

    ``q**(sum_j (r_j - x_j)(n - y_j + k - j + 1)) prod_{j<=k+1} [r_j choose x_j]_q
    / [r + k choose n + k]_q``.  Infeasible hypotheses get 0.
    """
    if not 0 <= n <= r_total:
        raise DomainError(f"sample size {n} outside 0..{r_total}")
    xs = _full(x, n)
    rs = _full(r_hypothesis, r_total)
    if len(xs) != len(rs):
        raise DomainError("sample and hypothesis have different numbers of classes")
    if any(v < 0 for v in xs):
        raise DomainError(f"sample {tuple(x)} does not fit in {n} draws")
    if any(v < 0 for v in rs) or any(a > b for a, b in zip(xs, rs)):
        return q.zero()
    k = len(xs) - 1
    y = partial_sums(xs)
    e = sum((rs[j] - xs[j]) * (n - y[j] + k - j) for j in range(k))
    value = q.pow(e)
    for rj, xj in zip(rs, xs):
        value = value * q_binomial(rj, xj, q)
    return value / q_binomial(r_total + k, n + k, q)


def hypotheses(r_total: int, k: int) -> Iterator[tuple[int, ...]]:
    """All ``(r_1..r_k)`` with ``sum <= r_total``, lexicographic."""
    return bounded_compositions(k, r_total)


def posterior_table(r_total: int, n: int, x: Sequence[int], q: QBase) -> PmfTable:
    """Posterior over every hypothesis that can produce the sample."""
    x = tuple(int(v) for v in x)
    k = len(x)
    support, probs = [], []
    for rs in hypotheses(r_total, k):
        if any(a > b for a, b in zip(x, rs)) or n - sum(x) > r_total - sum(rs):
            continue
        support.append(rs)
        probs.append(posterior_r_given_x(r_total, n, x, rs, q))
    return PmfTable.build(support, probs, meta={"law": "posterior", "r_total": r_total,
                                                "n": n, "x": list(x)})
