import math
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from henon.arith import padic_valuation
from henon.padic import PAdic, PrecisionError

from conftest import rationals


@given(rationals(nonzero=True), rationals(nonzero=True), st.sampled_from([2, 3, 5, 7]))
def test_ring_operations_match_exact(a, b, p):
    A, B = PAdic.from_rational(a, p, 30), PAdic.from_rational(b, p, 30)
    for exact, approx in [(a + b, A + B), (a - b, A - B), (a * b, A * B), (a / b, A / B)]:
        if exact == 0:
            assert approx.is_zero
            continue
        if approx.is_zero:
            continue  # cancellation beyond the tracked precision
        assert approx.valuation() == padic_valuation(exact, p)
        # the unit agrees modulo the tracked relative precision
        ref = PAdic.from_rational(exact, p, approx.rel_prec)
        assert ref.u % p ** approx.rel_prec == approx.u % p ** approx.rel_prec


def test_orbit_valuations_match_exact():
    p, b = 3, F(1, 9)
    x, y = F(1, 3), F(2, 7)
    X, Y = PAdic.from_rational(x, p, 60), PAdic.from_rational(y, p, 60)
    for _ in range(5):
        x, y = y, x + y * y + b
        X, Y = Y, X + Y * Y + b
        assert Y.valuation() == padic_valuation(y, p)


def test_inexact_zero():
    z = PAdic.zero(5, ap=-2)
    with pytest.raises(PrecisionError):
        z.valuation()
    assert PAdic.zero(5, ap=3).valuation() == math.inf
    with pytest.raises(ZeroDivisionError):
        PAdic.from_rational(1, 5, 10) / PAdic.zero(5)
