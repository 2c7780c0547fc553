import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from qpolya.scalar import LogFloat, as_fraction, fsum_scalars, log_abs, to_float

finite = st.floats(min_value=-1e300, max_value=1e300, allow_nan=False, allow_infinity=False)
rationals = st.fractions(max_denominator=10 ** 6).filter(lambda f: abs(f) < 10 ** 9)


def test_zero_has_negative_infinite_log():
    z = LogFloat.zero()
    assert z.sign == 0
    assert z.log == -math.inf
    assert not z


def test_huge_powers_keep_precision():
    v = LogFloat.of(0.5) ** 5000
    assert v.log == pytest.approx(-5000 * math.log(2), rel=1e-15)
    assert float(v) == 0.0
    assert float(v * LogFloat.of(2.0) ** 5000) == 1.0


def test_from_log_round_trip():
    v = LogFloat.from_log(-1, 12345.678)
    assert v.sign == -1
    assert v.log == pytest.approx(12345.678, rel=1e-14)


def test_rational_conversion_is_correctly_rounded():
    f = Fraction(1, 3) ** 700
    v = LogFloat.of(f)
    ref = mpmath.mpf(1) / mpmath.mpf(3) ** 700
    assert float(mpmath.log(ref)) == pytest.approx(v.log, rel=1e-15)


def _close(v: LogFloat, ref: Fraction, rel: float) -> bool:
    if ref == 0:
        return v.sign == 0
    return v.sign == (1 if ref > 0 else -1) and abs(to_float(as_fraction_exact(v) / ref - 1)) <= rel


def as_fraction_exact(v: LogFloat) -> Fraction:
    m, e = v.mantissa_exponent()
    return Fraction(m) * Fraction(2) ** e


@given(finite, finite)
def test_arithmetic_matches_exact(a, b):
    la, lb = LogFloat.of(a), LogFloat.of(b)
    fa, fb = Fraction(a), Fraction(b)
    assert _close(la * lb, fa * fb, 2.3e-16)
    if b != 0:
        assert _close(la / lb, fa / fb, 2.3e-16)
    total = la + lb
    if fa + fb != 0:
        # one rounding relative to the larger operand
        err = abs(as_fraction_exact(total) - (fa + fb)) if total else abs(fa + fb)
        assert err <= max(abs(fa), abs(fb)) * Fraction(2.3e-16)


@given(rationals, rationals)
def test_comparisons_agree_with_fractions(a, b):
    la, lb = LogFloat.of(a), LogFloat.of(b)
    assert (la < lb) == (float(a) < float(b)) or float(a) == float(b)
    assert (la == la) and (la <= la)


@given(st.lists(finite, min_size=1, max_size=30))
def test_fsum_is_compensated(values):
    total = fsum_scalars([LogFloat.of(v) for v in values])
    assert to_float(total) == pytest.approx(math.fsum(values), rel=1e-15, abs=1e-290)


def test_fsum_of_fractions_is_exact():
    assert fsum_scalars([Fraction(1, 3), Fraction(1, 6), Fraction(1, 2)]) == 1


def test_helpers():
    assert to_float(Fraction(1, 4)) == 0.25
    assert to_float(Fraction(10) ** 400) == math.inf
    assert log_abs(Fraction(-1, 2)) == pytest.approx(math.log(0.5))
    assert log_abs(LogFloat.zero()) == -math.inf
    assert as_fraction(3) == Fraction(3)
    with pytest.raises(TypeError):
        as_fraction(LogFloat.of(0.375))


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        LogFloat.of(math.nan)
    with pytest.raises(ZeroDivisionError):
        LogFloat.one() / LogFloat.zero()
