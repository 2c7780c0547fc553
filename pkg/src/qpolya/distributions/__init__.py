"""Probability laws of the multiple q-Polya urn."""

from .convergence import ConvergencePoint, convergence_sweep, scaled_counts
from .inverse import (
    closing_draw_prob,
    inverse_qpolya_chained,
    inverse_qpolya_pmf,
    inverse_qpolya_table,
    inverse_tail_bound,
)
from .limits import (
    lambda_rates,
    limit_params_for_urn,
    negative_q_multinomial_2nd_pmf,
    negative_q_multinomial_2nd_table,
    q_multinomial_2nd_pmf,
    q_multinomial_2nd_table,
    theta_rates,
)
from .params import LimitKind, LimitParams, PmfTable, PolyaParams, UrnSpec
from .polya import (
    DEFAULT_SUPPORT_CAP,
    color_draw_prob,
    conditional_draw_prob,
    conditional_params,
    marginal_params,
    multinomial_reduction_pmf,
    negative_qhypergeometric_pmf,
    q_uniform_draw_pmf,
    qhypergeometric_pmf,
    qpolya_pmf,
    qpolya_table,
    urn_law_table,
    urn_table,
)
from .posterior import (
    hypotheses,
    posterior_r_given_x,
    posterior_table,
    q_uniform_prior,
    sample_likelihood,
    sample_marginal_pmf,
)
from .representations import (
    check_negative_regime,
    conditional_given_sum_negqbinomial,
    conditional_given_sum_qbinomial,
    negqbinomial_block_pmf,
    negqbinomial_total_pmf,
    qbinomial_block_pmf,
    qbinomial_total_pmf,
)

__all__ = [name for name in dir() if not name.startswith("_")]
