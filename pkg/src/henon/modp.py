"""Quadratic Henon maps reduced mod p: cycle structure, multiplier orders,
and the period filter S(b, p).

A Q-rational point of period N for (y, x + y^2 + b) with b a p-adic integer
(p >= 5) reduces to a point of some period M mod p, and N = M*d for a divisor
d of the order of the cycle's multiplier.  Collecting M*d over all cycles mod
p gives a finite set containing every rational period.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .arith import as_fraction, factorize, is_prime, padic_valuation
from .core import HenonMap, Matrix2

Mat = tuple[int, int, int, int]

MIN_FILTER_PRIME = 5
DEFAULT_FILTER_PRIME_COUNT = 8


class Singular(ValueError):
    pass


class Fp:
    """Element of the prime field F_p (canonical representative in [0, p))."""

    __slots__ = ("v", "p")

    def __init__(self, v: int, p: int):
        self.v = v % p
        self.p = p

    @classmethod
    def from_rational(cls, q, p: int) -> "Fp":
        q = as_fraction(q)
        if q.denominator % p == 0:
            raise ZeroDivisionError(f"{q} is not integral at {p}")
        return cls(q.numerator * pow(q.denominator, -1, p), p)

    def _coerce(self, o) -> int:
        if isinstance(o, Fp):
            if o.p != self.p:
                raise ValueError("mixing different primes")
            return o.v
        if isinstance(o, int):
            return o
        if isinstance(o, Fraction):
            return Fp.from_rational(o, self.p).v
        return NotImplemented

    def __add__(self, o):
        return Fp(self.v + self._coerce(o), self.p)

    __radd__ = __add__

    def __sub__(self, o):
        return Fp(self.v - self._coerce(o), self.p)

    def __rsub__(self, o):
        return Fp(self._coerce(o) - self.v, self.p)

    def __mul__(self, o):
        return Fp(self.v * self._coerce(o), self.p)

    __rmul__ = __mul__

    def __truediv__(self, o):
        w = self._coerce(o) % self.p
        if w == 0:
            raise ZeroDivisionError("division by zero in F_p")
        return Fp(self.v * pow(w, -1, self.p), self.p)

    def __rtruediv__(self, o):
        return Fp(self._coerce(o), self.p) / self

    def __neg__(self):
        return Fp(-self.v, self.p)

    def __pow__(self, e: int):
        return Fp(pow(self.v, e, self.p), self.p)

    def __eq__(self, o):
        if isinstance(o, Fp):
            return self.p == o.p and self.v == o.v
        if isinstance(o, int):
            return (self.v - o) % self.p == 0
        return NotImplemented

    def __hash__(self):
        return hash((self.v, self.p))

    def __int__(self):
        return self.v

    def __repr__(self):
        return f"Fp({self.v}, {self.p})"

    def __str__(self):
        return str(self.v)


@dataclass(frozen=True)
class FpMap:
    """(x, y) -> (y, x + y^2 + b) over F_p, b stored as a residue."""

    b: int
    p: int

    def __call__(self, x: int, y: int) -> tuple[int, int]:
        return y, (x + y * y + self.b) % self.p

    def as_henon(self) -> HenonMap:
        return HenonMap(Fp(1, self.p), (Fp(self.b, self.p), Fp(0, self.p)))


@dataclass(frozen=True)
class CycleData:
    length: int
    representative: tuple[int, int]
    multiplier_order: int
    multiplier: Mat


@dataclass(frozen=True)
class PeriodSet:
    """A finite set of admissible periods, or ``allowed=None`` (no information)."""

    allowed: frozenset | None

    @classmethod
    def unfiltered(cls) -> "PeriodSet":
        return cls(None)

    @property
    def is_unfiltered(self) -> bool:
        return self.allowed is None

    def __contains__(self, n: int) -> bool:
        return self.allowed is None or n in self.allowed

    def intersect(self, other: "PeriodSet") -> "PeriodSet":
        if self.allowed is None:
            return other
        if other.allowed is None:
            return self
        return PeriodSet(self.allowed & other.allowed)

    def issubset(self, s: Iterable[int]) -> bool:
        return self.allowed is not None and self.allowed <= frozenset(s)

    def sorted(self) -> list[int] | None:
        return None if self.allowed is None else sorted(self.allowed)

    def __str__(self) -> str:
        return "Unfiltered" if self.allowed is None else "{" + ", ".join(map(str, sorted(self.allowed))) + "}"


def reduce_map(b, p: int) -> FpMap | None:
    """The reduction of (y, x + y^2 + b) mod p, or None when p is bad.

    p is bad when p < 5 or b is not a p-adic integer.
    """
    b = as_fraction(b)
    if p < MIN_FILTER_PRIME or not is_prime(p) or padic_valuation(b, p) < 0:
        return None
    return FpMap(Fp.from_rational(b, p).v, p)


def _mat_mul(A: Mat, B: Mat, p: int) -> Mat:
    a, b, c, d = A
    e, f, g, h = B
    return ((a * e + b * g) % p, (a * f + b * h) % p, (c * e + d * g) % p, (c * f + d * h) % p)


def _mat_pow(A: Mat, n: int, p: int) -> Mat:
    R: Mat = (1, 0, 0, 1)
    while n:
        if n & 1:
            R = _mat_mul(R, A, p)
        A = _mat_mul(A, A, p)
        n >>= 1
    return R


def _as_mat(M, p: int) -> Mat:
    if isinstance(M, Matrix2):
        entries = (M.m11, M.m12, M.m21, M.m22)
    elif len(M) == 2:
        (a, b), (c, d) = M
        entries = (a, b, c, d)
    else:
        entries = tuple(M)
    out = []
    for e in entries:
        if isinstance(e, Fp):
            out.append(e.v)
        elif isinstance(e, Fraction):
            out.append(Fp.from_rational(e, p).v)
        else:
            out.append(int(e) % p)
    return tuple(out)  # type: ignore[return-value]


_IDENTITY: Mat = (1, 0, 0, 1)


def matrix_order(M, p: int) -> int:
    """Order of M in GL_2(F_p).

    Every element order divides the exponent p(p-1)(p+1); start there and
    strip prime factors while the power stays the identity.
    """
    A = _as_mat(M, p)
    if (A[0] * A[3] - A[1] * A[2]) % p == 0:
        raise Singular("matrix is singular mod p")
    r = p * (p - 1) * (p + 1)
    for q in factorize(r):
        while r % q == 0 and _mat_pow(A, r // q, p) == _IDENTITY:
            r //= q
    return r


def cycle_decomposition(fmap: FpMap) -> list[CycleData]:
    """All cycles of the permutation fmap of A^2(F_p), in order of first point.

    Points are indexed x*p + y; the representative is the smallest index in
    the cycle, and its multiplier J(Q_{M-1}) ... J(Q_0) uses J = [[0,1],[1,2y]].
    """
    p, b = fmap.p, fmap.b
    n = p * p
    seen = bytearray(n)
    out = []
    for start in range(n):
        if seen[start]:
            continue
        x, y = divmod(start, p)
        lam: Mat = _IDENTITY
        length = 0
        i = start
        while not seen[i]:
            seen[i] = 1
            length += 1
            # J(x, y) @ lam with J = [[0, 1], [1, 2y]]
            l11, l12, l21, l22 = lam
            ty = 2 * y
            lam = (l21, l22, (l11 + ty * l21) % p, (l12 + ty * l22) % p)
            x, y = y, (x + y * y + b) % p
            i = x * p + y
        if i != start:
            raise AssertionError("reduced map is not a bijection")
        out.append(CycleData(length, divmod(start, p), matrix_order(lam, p), lam))
    return out


def _divisors(n: int) -> list[int]:
    small = [k for k in range(1, int(n ** 0.5) + 1) if n % k == 0]
    return sorted(set(small + [n // k for k in small]))


def period_filter_set(b, p: int) -> PeriodSet:
    fmap = reduce_map(b, p)
    if fmap is None:
        return PeriodSet.unfiltered()
    allowed: set[int] = set()
    for cyc in cycle_decomposition(fmap):
        allowed.update(cyc.length * d for d in _divisors(cyc.multiplier_order))
    return PeriodSet(frozenset(allowed))


def intersect_filters(b, primes: Sequence[int]) -> PeriodSet:
    out = PeriodSet.unfiltered()
    for p in primes:
        out = out.intersect(period_filter_set(b, p))
    return out


def default_filter_primes(b, count: int = DEFAULT_FILTER_PRIME_COUNT) -> list[int]:
    """The first ``count`` primes >= 5 at which b is integral."""
    b = as_fraction(b)
    out = []
    p = MIN_FILTER_PRIME
    while len(out) < count:
        if is_prime(p) and b.denominator % p:
            out.append(p)
        p += 1
    return out
