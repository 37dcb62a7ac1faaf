import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st
from sympy import isprime

from henon.arith import (ARCH, INF, QPlace, abs_at_place, enumerate_rationals, factorize, height_key,
                         integer_sqrt_exact, is_prime, log_abs_at_place, mult_height, padic_valuation,
                         parse_rational, relevant_primes, weil_height)

from conftest import rationals


@pytest.mark.parametrize("q,p,expected", [
    (Fraction(-9, 16), 2, -4),
    (Fraction(0), 5, INF),
    (Fraction(50, 27), 3, -3),
    (Fraction(50, 27), 5, 2),
    (Fraction(7), 7, 1),
])
def test_padic_valuation_examples(q, p, expected):
    assert padic_valuation(q, p) == expected


@pytest.mark.parametrize("q,v,expected", [
    (Fraction(-9, 16), ARCH, Fraction(9, 16)),
    (Fraction(-9, 16), QPlace.finite(2), Fraction(16)),
    (Fraction(50, 27), QPlace.finite(3), Fraction(27)),
    (Fraction(0), QPlace.finite(3), Fraction(0)),
])
def test_abs_at_place_examples(q, v, expected):
    assert abs_at_place(q, v) == expected


def test_heights_examples():
    assert mult_height(3) == 3 and weil_height(3) == pytest.approx(math.log(3))
    assert mult_height(Fraction(-9, 16)) == 16
    assert mult_height(0) == 1 and weil_height(0) == 0


def test_integer_sqrt_exact():
    assert integer_sqrt_exact(16) == 4
    assert integer_sqrt_exact(2) is None
    assert integer_sqrt_exact(1) == 1
    assert integer_sqrt_exact(10**40) == 10**20
    assert integer_sqrt_exact(10**40 + 1) is None


def test_enumerate_small():
    assert list(enumerate_rationals(1)) == [-1, 0, 1]
    assert sorted(enumerate_rationals(2)) == sorted(map(Fraction, ["-2", "-1", "-1/2", "0", "1/2", "1", "2"]))
    sq = set(enumerate_rationals(4, square_denominator_only=True))
    assert Fraction(-9, 16) not in sq
    assert {Fraction(1, 4), Fraction(-1, 4), Fraction(3, 4), Fraction(-3, 4)} <= sq
    assert Fraction(1, 2) not in sq


def _brute_force(T, square_only=False):
    out = set()
    for m in range(1, T + 1):
        if square_only and math.isqrt(m) ** 2 != m:
            continue
        for n in range(-T, T + 1):
            if math.gcd(n, m) == 1:
                out.add(Fraction(n, m))
    return out


@pytest.mark.parametrize("T", [1, 2, 5, 13, 30])
@pytest.mark.parametrize("square_only", [False, True])
def test_enumerate_matches_brute_force(T, square_only):
    got = list(enumerate_rationals(T, square_only))
    assert len(got) == len(set(got))
    assert set(got) == _brute_force(T, square_only)
    keys = [height_key(q) for q in got]
    assert all(a < b for a, b in zip(keys, keys[1:]))


def test_enumerate_count_formula():
    # per square denominator m: 2*phi(m)-style count of numerators coprime to m with |n| <= T
    T = 50
    expected = sum(sum(1 for n in range(-T, T + 1) if math.gcd(n, s * s) == 1) for s in range(1, math.isqrt(T) + 1))
    assert len(list(enumerate_rationals(T, True))) == expected


def test_is_prime_against_sympy():
    for n in list(range(-5, 5000)) + [2**61 - 1, 2**64 - 59, 3215031751, 341550071728321]:
        assert is_prime(n) == bool(isprime(n)), n
    with pytest.raises(ValueError):
        is_prime(2**64 + 13)


@given(st.integers(2, 10**12))
def test_factorize_reconstructs(n):
    f = factorize(n)
    assert math.prod(p**e for p, e in f.items()) == n
    assert all(isprime(p) for p in f)


@given(rationals(10**9, 10**9, nonzero=True))
def test_product_formula(q):
    places = [ARCH] + [QPlace.finite(p) for p in relevant_primes(q)]
    # exact: the product of |q|_v is 1
    prod = Fraction(1)
    for v in places:
        prod *= abs_at_place(q, v)
    assert prod == 1
    assert sum(log_abs_at_place(q, v) for v in places) == pytest.approx(0, abs=1e-9 * (1 + weil_height(q)))


@given(rationals(10**9, 10**9, nonzero=True))
def test_height_is_sum_of_local_log_plus(q):
    places = [ARCH] + [QPlace.finite(p) for p in relevant_primes(q)]
    # exact form: H(q) = prod max(1, |q|_v)
    assert math.prod(max(Fraction(1), abs_at_place(q, v)) for v in places) == mult_height(q)
    assert sum(max(0.0, log_abs_at_place(q, v)) for v in places) == pytest.approx(weil_height(q))


def test_parse_rational():
    assert parse_rational("-9/16") == Fraction(-9, 16)
    assert parse_rational(" 7 ") == 7
    for bad in ["1.5", "1e3", "a", "1/0", ""]:
        with pytest.raises(ValueError):
            parse_rational(bad)


def test_qplace():
    assert str(ARCH) == "inf" and ARCH.is_archimedean and ARCH.local_degree == 1
    assert QPlace.parse("7") == QPlace.finite(7)
    with pytest.raises(ValueError):
        QPlace.finite(9)
