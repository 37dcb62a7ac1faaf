"""Exact scalar arithmetic over Q.

Rationals are :class:`fractions.Fraction` throughout (always reduced, positive
denominator, zero is 0/1).  This module adds places of Q, p-adic valuations,
absolute values, Weil heights and a height-ordered enumeration of rationals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

Rational = Union[int, Fraction]

INF = math.inf

_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_MR_LIMIT = 1 << 64


def as_fraction(q) -> Fraction:
    if isinstance(q, Fraction):
        return q
    if isinstance(q, int):
        return Fraction(q)
    if isinstance(q, str):
        return parse_rational(q)
    raise TypeError(f"cannot interpret {q!r} as a rational")


def parse_rational(text: str) -> Fraction:
    """Parse ``n`` or ``n/m``; decimals are rejected to keep inputs exact."""
    s = text.strip()
    if "." in s or "e" in s.lower():
        raise ValueError(f"not an exact rational: {text!r}")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational: {text!r}") from exc


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid for every n < 2**64."""
    if n < 2:
        return False
    if n >= _MR_LIMIT:
        raise ValueError("primality test only supports n < 2**64")
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def prime_factors(n: int) -> list[int]:
    """Distinct prime divisors of |n| by trial division (n != 0)."""
    n = abs(n)
    if n == 0:
        raise ValueError("0 has no finite factorisation")
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out.append(n)
    return out


def factorize(n: int) -> dict[int, int]:
    n = abs(n)
    out: dict[int, int] = {}
    for p in prime_factors(n):
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        out[p] = e
    return out


@dataclass(frozen=True, order=True)
class QPlace:
    """A place of Q: ``p=None`` is the archimedean place, otherwise a prime."""

    p: int | None = None

    def __post_init__(self):
        if self.p is not None and not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")

    @classmethod
    def infinite(cls) -> "QPlace":
        return cls(None)

    @classmethod
    def finite(cls, p: int) -> "QPlace":
        return cls(p)

    @property
    def is_archimedean(self) -> bool:
        return self.p is None

    @property
    def local_degree(self) -> int:
        # [Q_v : Q_v] / [Q : Q]
        return 1

    def __str__(self) -> str:
        return "inf" if self.p is None else str(self.p)

    @classmethod
    def parse(cls, text: str) -> "QPlace":
        return cls(None) if text in ("inf", "oo", "infinity") else cls(int(text))


ARCH = QPlace.infinite()


def _int_valuation(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def padic_valuation(q: Rational, p: int) -> float | int:
    """v_p(q), with v_p(0) = +inf."""
    q = as_fraction(q)
    if q == 0:
        return INF
    return _int_valuation(q.numerator, p) - _int_valuation(q.denominator, p)


def abs_at_place(q: Rational, v: QPlace) -> Fraction:
    """|q|_v, exact: the usual absolute value at infinity, p^(-v_p(q)) at p."""
    q = as_fraction(q)
    if v.p is None:
        return abs(q)
    if q == 0:
        return Fraction(0)
    return Fraction(v.p) ** (-padic_valuation(q, v.p))


def log_abs_at_place(q: Rational, v: QPlace) -> float:
    a = abs_at_place(q, v)
    return -INF if a == 0 else log_fraction(a)


def log_fraction(q: Fraction) -> float:
    """Natural log of a positive rational without overflowing floats."""
    return math.log(q.numerator) - math.log(q.denominator)


def mult_height(q: Rational) -> int:
    q = as_fraction(q)
    return max(abs(q.numerator), q.denominator)


def weil_height(q: Rational) -> float:
    return math.log(mult_height(q))


def relevant_primes(*qs: Rational) -> list[int]:
    """Sorted primes dividing some numerator or denominator."""
    ps: set[int] = set()
    for q in qs:
        q = as_fraction(q)
        if q.numerator:
            ps.update(prime_factors(q.numerator))
        ps.update(prime_factors(q.denominator))
    return sorted(ps)


def integer_sqrt_exact(n: int) -> int | None:
    """The s >= 0 with s*s == n, or None when n is not a perfect square."""
    if n < 0:
        return None
    s = math.isqrt(n)
    return s if s * s == n else None


def _rationals_of_height(h: int, square_denominator_only: bool) -> list[Fraction]:
    out = []
    for m in range(1, h + 1):
        if square_denominator_only and integer_sqrt_exact(m) is None:
            continue
        if m == h:
            nums = range(-h, h + 1)
        else:
            nums = (-h, h)
        for n in nums:
            if math.gcd(n, m) == 1 and max(abs(n), m) == h:
                out.append(Fraction(n, m))
    out.sort(key=lambda q: (q.denominator, q.numerator))
    return out


def enumerate_rationals(T: int, square_denominator_only: bool = False) -> Iterator[Fraction]:
    """All reduced n/m with max(|n|, m) <= T, ordered by (H, den, num)."""
    if T < 1:
        raise ValueError("T must be >= 1")
    for h in range(1, T + 1):
        yield from _rationals_of_height(h, square_denominator_only)


def height_key(q: Fraction) -> tuple[int, int, int]:
    return (mult_height(q), q.denominator, q.numerator)
