import math
from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import assume, given, settings, strategies as st
from sympy import Poly, factor_list

from henon.core import HenonMap, PlanePoint as P, apply, apply_inverse
from henon.funcfield import (INFINITY, DegreeUnsupported, FFPlace, PoleAtSample, RatFunc, UnsupportedNonConstantA,
                             ZeroInput, ff_local_height, generic_canonical_height, height_divisors, is_isotrivial,
                             ord_at_place, parse_f_polynomial, parse_ratfunc, relevant_places, rho_exceeds_one,
                             rows_to_csv, specialization_experiment, T_SYMBOL)
from henon.heights import CapExceeded, Direction

t = RatFunc.t()
ZERO = RatFunc(0)
PT = FFPlace.parse("t")


def test_ord_examples():
    assert ord_at_place(t, PT) == 1
    assert ord_at_place(t, INFINITY) == -1
    g = parse_ratfunc("(t^2+1)/t^3")
    assert ord_at_place(g, FFPlace.parse("t^2+1")) == 1
    assert ord_at_place(g, INFINITY) == 1
    with pytest.raises(ZeroInput):
        ord_at_place(ZERO, PT)


def test_parse_and_normalise():
    g = parse_ratfunc("3/(3t^3)")
    assert g.denominator.is_monic and g.denominator_coeffs() == [0, 0, 0, 1]
    assert g.numerator_coeffs() == [1]
    assert parse_ratfunc("t^2+2t") == t * t + 2 * t
    assert parse_ratfunc("-9/16") == RatFunc(F(-9, 16))
    for bad in ["x+1", "t.5", "__import__('os')", ""]:
        with pytest.raises(ValueError):
            parse_ratfunc(bad)
    with pytest.raises(ValueError):
        FFPlace.finite(parse_ratfunc("t^2-1"))
    assert FFPlace.finite(parse_ratfunc("2t+2")) == FFPlace.parse("t+1")


def test_isotriviality_triple():
    assert is_isotrivial([t, ZERO]) is False
    assert is_isotrivial([RatFunc(5), ZERO]) is True
    assert is_isotrivial(parse_f_polynomial("y^2+2ty+t^2")) is True
    assert is_isotrivial([t * t + 2 * t, ZERO]) is False
    with pytest.raises(UnsupportedNonConstantA):
        is_isotrivial([t, ZERO], a=t)


def test_rho_examples():
    assert rho_exceeds_one([t, ZERO], INFINITY)
    assert not rho_exceeds_one([t, ZERO], PT)
    assert rho_exceeds_one([1 / t, ZERO], PT)
    with pytest.raises(DegreeUnsupported):
        rho_exceeds_one([t, ZERO, ZERO], INFINITY)


def _div(D):
    return {str(pl): w for pl, w in D.items()}


def test_divisor_examples():
    phi = HenonMap.quadratic(t)
    Dp, Dm = height_divisors(phi, P(ZERO, ZERO))
    assert _div(Dp) == {"inf": F(1, 2)} and _div(Dm) == {"inf": F(1, 2)}
    Dp, Dm = height_divisors(phi, P(t, ZERO))
    assert _div(Dp) == {"inf": F(1, 2)} and _div(Dm) == {"inf": F(1)}
    Dp, Dm = height_divisors(HenonMap.quadratic(RatFunc(5)), P(RatFunc(1), RatFunc(1)))
    assert not Dp.weights and not Dm.weights


def test_generic_height_examples():
    assert generic_canonical_height(HenonMap.quadratic(t), P(ZERO, ZERO)) == 1
    assert generic_canonical_height(HenonMap.quadratic(t), P(t, ZERO)) == F(3, 2)
    assert generic_canonical_height(HenonMap.quadratic(RatFunc(F(-9, 16))), P(RatFunc(F(1, 4)), RatFunc(F(-3, 4)))) == 0


def test_finite_place_divisor():
    # b = 1/t: pole at (t) pushes (0,0) out after one step
    Dp, Dm = height_divisors(HenonMap.quadratic(1 / t), P(ZERO, ZERO))
    assert _div(Dp) == {"(t)": F(1, 2)} and _div(Dm) == {"(t)": F(1, 2)}
    # degree-2 place counts twice in the degree
    Dp, _ = height_divisors(HenonMap.quadratic(1 / (t * t + 1)), P(ZERO, ZERO))
    assert Dp.degree == 2 * Dp.weights[FFPlace.parse("t^2+1")]


def _mp_height(b, x, y, N=30):
    mpmath.mp.dps = 50
    out = mpmath.mpf(0)
    for backward in (False, True):
        u, v = mpmath.mpf(x), mpmath.mpf(y)
        for _ in range(N):
            u, v = (v - u * u - b, u) if backward else (v, u + v * v + b)
        out += mpmath.log(abs(u if backward else v)) / 2 ** N
    return float(out)


def test_specialisation_ratios():
    phi = HenonMap.quadratic(t)
    rows = specialization_experiment(phi, P(ZERO, ZERO), [10, 100, 1000, 10**4])
    ratios = [r.ratio for r in rows]
    assert all(r.status == "ok" for r in rows)
    assert all(abs(a - 1) >= abs(b - 1) for a, b in zip(ratios, ratios[1:]))
    assert abs(ratios[-1] - 1) < 0.15
    for r in rows:
        # integral t0: only the archimedean place contributes
        assert r.hhat == pytest.approx(_mp_height(int(r.t0), 0, 0), abs=1e-7)
    assert rows_to_csv(rows).splitlines()[0] == "t0,h_t0,hhat,ratio,status"


def test_isotrivial_family_ratio_tends_to_zero():
    phi = HenonMap.quadratic(RatFunc(5))
    rows = specialization_experiment(phi, P(RatFunc(1), RatFunc(1)), [10, 10**4, 10**8])
    ratios = [r.ratio for r in rows]
    assert ratios[0] > ratios[1] > ratios[2] > 0
    assert ratios[2] < 0.5 * ratios[0]


def test_pole_marker():
    rows = specialization_experiment(HenonMap.quadratic(1 / t), P(ZERO, ZERO), [0, 2])
    assert rows[0].status == "pole" and rows[0].hhat is None
    assert rows[1].status == "ok"


# --- property suites -----------------------------------------------------------

coeffs = st.lists(st.integers(-9, 9), min_size=1, max_size=4)


def _rf(num, den):
    if not any(den):
        den = [1]
    return RatFunc.from_coeffs(num, den)


ratfuncs = st.builds(_rf, coeffs, coeffs).filter(lambda g: not g.is_zero)


@settings(max_examples=200)
@given(ratfuncs)
def test_product_formula(g):
    places = {INFINITY}
    for poly in (g.numerator, g.denominator):
        if poly.degree() > 0:
            _, facs = factor_list(poly.as_expr(), T_SYMBOL)
            places.update(FFPlace.finite(Poly(f, T_SYMBOL)) for f, _ in facs)
    assert sum(ord_at_place(g, pl) * pl.degree for pl in places) == 0


polys = st.lists(st.integers(-4, 4), min_size=1, max_size=3).map(lambda c: RatFunc.from_coeffs(c))
families = st.tuples(st.lists(st.integers(-4, 4), min_size=2, max_size=3).filter(lambda c: any(c[1:])), polys, polys)


@settings(max_examples=20)
@given(families)
def test_functoriality_generic_fibre(fam):
    bc, x, y = fam
    phi = HenonMap.quadratic(RatFunc.from_coeffs(bc))
    pt = P(x, y)
    try:
        Dp, Dm = height_divisors(phi, pt)
        Dp1, _ = height_divisors(phi, apply(phi, pt))
        _, Dm1 = height_divisors(phi, apply_inverse(phi, pt))
    except CapExceeded:
        assume(False)
    assert Dp1.degree == 2 * Dp.degree
    assert Dm1.degree == 2 * Dm.degree


@settings(max_examples=40)
@given(ratfuncs, polys, polys)
def test_divisor_integrality(b, x, y):
    phi, pt = HenonMap.quadratic(b), P(x, y)
    for beta in relevant_places(phi, pt):
        for d in Direction:
            try:
                lam = ff_local_height(phi, pt, beta, d)
            except CapExceeded:
                continue
            if lam.escape_step is not None:
                assert (lam.weight * 2 ** lam.escape_step).denominator == 1
            assert lam.weight >= 0


@settings(max_examples=60)
@given(ratfuncs, st.one_of(st.just(ZERO), ratfuncs))
def test_isotriviality_consistency(b0, b1):
    phi = HenonMap(RatFunc(1), (b0, b1))
    if not is_isotrivial(phi):
        places = relevant_places(phi)
        assert any(rho_exceeds_one(phi, beta) for beta in places)
