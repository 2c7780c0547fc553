"""Distance between finite-urn laws and their large-urn limits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..errors import DomainError
from ..qcore import QBase, bounded_compositions, boxed_tuples
from ..scalar import Scalar, to_float
from .inverse import inverse_qpolya_pmf
from .limits import limit_params_for_urn, negative_q_multinomial_2nd_pmf, q_multinomial_2nd_pmf
from .params import PolyaParams, UrnSpec
from .polya import urn_table

__all__ = ["ConvergencePoint", "convergence_sweep", "scaled_counts"]


@dataclass(frozen=True)
class ConvergencePoint:
    t: int
    counts: tuple[int, ...]
    distance: Scalar

    @property
    def distance_float(self) -> float:
        return to_float(self.distance)


def scaled_counts(base: Sequence[int], t: int, scale: str = "all") -> tuple[int, ...]:
    """``c_j 2**t`` for every colour (``all``) or for the last one only (``last``)."""
    factor = 2 ** t
    if scale == "all":
        return tuple(c * factor for c in base)
    if scale == "last":
        return tuple(base[:-1]) + (base[-1] * factor,)
    raise DomainError(f"scale must be 'all' or 'last', got {scale!r}")


def _sup(pairs) -> Scalar:
    best = None
    for a, b in pairs:
        d = abs(a - b)
        if best is None or d > best:
            best = d
    return best


def convergence_sweep(base: Sequence[int], ts: Sequence[int], n: int, m: int, q: QBase,
                      law: str = "qpolya", scale: str = "all", wmax: int = 8,
                      nu: int | None = None) -> list[ConvergencePoint]:
    """Sup-norm distance to the limit law for each urn ``scaled_counts(base, t)``.

    The limit rates are matched to each finite urn (``theta_rates`` for
    ``0 < q < 1``, ``lambda_rates`` for ``q > 1``).  ``law`` is
    ``qpolya`` (all outcomes of ``n`` draws) or ``inverse-qpolya`` (the
    box ``w_j <= wmax``).
    """
    q = QBase.of(q)
    points = []
    for t in ts:
        spec = UrnSpec(scaled_counts(base, t, scale), m, q)
        lim = limit_params_for_urn(spec, nu if nu is not None else (n if m < 0 else None))
        if law == "qpolya":
            finite = urn_table(spec, n).as_dict()
            pairs = ((finite[x], q_multinomial_2nd_pmf(lim, n, x))
                     for x in bounded_compositions(spec.k, n))
        elif law == "inverse-qpolya":
            params = PolyaParams.from_urn(spec, n)
            pairs = ((inverse_qpolya_pmf(params, w), negative_q_multinomial_2nd_pmf(lim, n, w))
                     for w in boxed_tuples([wmax] * spec.k))
        else:
            raise DomainError(f"no limit law for {law!r}")
        points.append(ConvergencePoint(t, spec.counts, _sup(pairs)))
    return points
