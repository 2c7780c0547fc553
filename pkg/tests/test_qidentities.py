from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from oracles import gaussian_binomial, q_int
from qpolya import DomainError, QBase, TruncationError
from qpolya.qidentities import (
    CAUCHY,
    FINITE_IDENTITIES,
    VANDERMONDE,
    IdentityInstance,
    TruncationPolicy,
    cauchy_lhs,
    cauchy_shifted_lhs,
    cauchy_sum,
    cauchy_sum_shifted,
    inverse_vandermonde_lhs,
    inverse_vandermonde_sum,
    run_finite_suite,
    run_inverse_suite,
    vandermonde_lhs,
    vandermonde_sum,
)
from qpolya.scalar import to_float

half = QBase.of("1/2")
two = QBase.of(2)


def falling(x, n, q):
    out = Fraction(1)
    for i in range(n):
        out *= q_int(x - i, q) if x - i >= 0 else -q ** (x - i) * q_int(i - x, q)
    return out


class TestVandermonde:
    @pytest.mark.parametrize("q", [half, two, QBase.of("3/10")])
    def test_single_draw(self, q):
        # [x1]_q + q**x1 [x2]_q = [x1 + x2]_q
        inst = IdentityInstance(1, (2, 3), q)
        assert vandermonde_sum(inst, "E27") == q_int(5, q.value)

    def test_zero_arguments(self):
        for n in (1, 2, 4):
            assert vandermonde_sum(IdentityInstance(n, (0, 0, 0), half), "E27") == 0

    def test_brute_force_value(self):
        inst = IdentityInstance(2, (1, 1, 1), half)
        want = q_int(3, Fraction(1, 2)) * q_int(2, Fraction(1, 2))
        assert want == Fraction(21, 8)
        for variant in ("E27", "E28"):
            assert vandermonde_sum(inst, variant) == want
        for variant in ("E27a", "E28a"):
            assert vandermonde_sum(inst, variant) == falling(4, 2, Fraction(1, 2))

    def test_unknown_variant(self):
        with pytest.raises(DomainError):
            vandermonde_sum(IdentityInstance(1, (1, 1), half), "E29")


class TestCauchy:
    def test_two_term(self):
        assert cauchy_sum(IdentityInstance(1, (1, 1), half), "E29") == Fraction(3, 2)

    @pytest.mark.parametrize("variant", ["E29", "E210"])
    def test_point_support(self, variant):
        n = 3
        assert cauchy_sum(IdentityInstance(n, (n, 0, 0), half), variant) == 1

    def test_brute_force_value(self):
        inst = IdentityInstance(2, (2, 1, 1), two)
        assert cauchy_sum(inst, "E210") == gaussian_binomial(4, 2, Fraction(2)) == 35
        assert cauchy_sum(inst, "E29") == 35

    def test_shifted_examples(self):
        assert cauchy_sum_shifted(2, 1, (1,), half) == gaussian_binomial(3, 2, Fraction(1, 2))
        assert cauchy_sum_shifted(3, 2, (1, 1), two) == gaussian_binomial(5, 4, Fraction(2))
        assert cauchy_sum_shifted(3, 2, (1, 1), two, "E210b") == gaussian_binomial(5, 4, Fraction(2))
        # r = n pins every r_j to x_j
        assert cauchy_sum_shifted(3, 3, (2,), half) == 1

    def test_shifted_rejects(self):
        with pytest.raises(DomainError):
            cauchy_sum_shifted(2, 3, (1,), half)
        with pytest.raises(DomainError):
            cauchy_sum_shifted(4, 1, (2,), half)


q_exact = st.sampled_from([Fraction(3, 10), Fraction(7, 10), Fraction(3, 2), Fraction(3)])


@st.composite
def integer_instances(draw):
    k = draw(st.integers(1, 3))
    n = draw(st.integers(1, 6))
    xs = tuple(draw(st.integers(0, 6)) for _ in range(k + 1))
    return n, xs, QBase.of(draw(q_exact))


@given(integer_instances())
def test_finite_identities_exact(case):
    n, xs, q = case
    inst = IdentityInstance(n, xs, q)
    for v in VANDERMONDE:
        assert vandermonde_sum(inst, v) == vandermonde_lhs(inst, v)
    for v in CAUCHY:
        assert cauchy_sum(inst, v) == cauchy_lhs(inst, v)
    assert cauchy_lhs(inst, "E29") == gaussian_binomial(sum(xs), n, q.value)


@given(integer_instances(), st.integers(0, 4))
def test_shifted_exact(case, extra):
    n, xs, q = case
    xs = xs[:-1]
    if sum(xs) > n:
        xs = tuple(min(x, n // len(xs)) for x in xs)
    r = n + extra
    for v in ("E29b", "E210b"):
        assert cauchy_sum_shifted(r, n, xs, q, v) == cauchy_shifted_lhs(r, n, len(xs), q)


@given(st.integers(1, 3), st.integers(1, 5),
       st.lists(st.floats(0.01, 5.99), min_size=4, max_size=4),
       st.sampled_from([0.3, 0.7, 1.5]))
def test_finite_identities_real(k, n, xs, q):
    inst = IdentityInstance(n, tuple(round(x, 3) for x in xs[:k + 1]), QBase.of(q))
    for v in ("E27", "E28", "E27a", "E28a"):
        want = to_float(vandermonde_lhs(inst, v))
        assert to_float(vandermonde_sum(inst, v)) == pytest.approx(want, rel=1e-8, abs=1e-10)


class TestInverse:
    def test_leading_zero_argument(self):
        for q in (half, two):
            inst = IdentityInstance(2, (0, Fraction(-5, 2)), QBase.of(q.value, exact=False))
            value, bound = inverse_vandermonde_sum(inst, "E211")
            # finite sum; only the rounding allowance remains
            assert bound < 1e-12
            assert abs(to_float(value - inverse_vandermonde_lhs(inst))) <= bound

    def test_examples(self):
        value, bound = inverse_vandermonde_sum(IdentityInstance(1, (1, 3), half), "E211")
        assert value == 1 / Fraction(7, 4) and bound == 0
        value, bound = inverse_vandermonde_sum(IdentityInstance(1, (1, 1, 4), half), "E211")
        assert value == 1 / q_int(4, Fraction(1, 2)) and bound == 0

    @pytest.mark.parametrize("variant,q", [("E211", 0.5), ("E212", 2.0)])
    def test_infinite_series(self, variant, q):
        inst = IdentityInstance(2, (0.7, -1.3, -2.2), QBase.of(q))
        value, bound = inverse_vandermonde_sum(inst, variant, TruncationPolicy(1e-12))
        err = abs(to_float(value - inverse_vandermonde_lhs(inst)))
        assert 0 < bound <= 1e-11
        assert err <= bound

    def test_convergence_conditions(self):
        # stated condition broken
        with pytest.raises(DomainError):
            inverse_vandermonde_sum(IdentityInstance(1, (0.5, 1.5), QBase.of(0.5)), "E211")
        # condition holds but on the wrong side of q = 1 for a real argument
        with pytest.raises(DomainError):
            inverse_vandermonde_sum(IdentityInstance(1, (0.5, -1.5), QBase.of(2.0)), "E211")
        with pytest.raises(DomainError):
            inverse_vandermonde_sum(IdentityInstance(1, (0.5, -1.5), QBase.of(0.5)), "E212")

    def test_truncation_failure(self):
        inst = IdentityInstance(1, (0.5, -1.1), QBase.of(0.95))
        with pytest.raises(TruncationError) as info:
            inverse_vandermonde_sum(inst, "E211", TruncationPolicy(1e-14, max_terms_per_index=5))
        assert info.value.achieved_bound > 1e-14

    def test_policy_validation(self):
        with pytest.raises(DomainError):
            TruncationPolicy(0.0)
        with pytest.raises(DomainError):
            TruncationPolicy(1e-12, 0)

    def test_instance_validation(self):
        with pytest.raises(DomainError):
            IdentityInstance(1, (1,), half)
        with pytest.raises(DomainError):
            IdentityInstance(0, (1, 1), half)


def test_suites_small():
    finite = run_finite_suite(count=12, seed=3)
    assert [r.identity for r in finite] == list(FINITE_IDENTITIES)
    assert all(r.instances == 12 for r in finite)
    assert all(r.exact_checked >= 1 for r in finite)
    inverse = run_inverse_suite(count=10, seed=3)
    assert sum(r.instances for r in inverse) == 10
    assert all(r.failures == 0 for r in inverse)
