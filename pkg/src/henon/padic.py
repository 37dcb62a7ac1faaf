"""Fixed-precision p-adic numbers with tracked absolute precision.

Used to keep following an orbit at a single finite place once the exact
rationals have grown too large.  Every value carries its absolute precision
``ap``: the true number is known modulo p^ap.  A value that is zero modulo
p^ap is an *inexact zero*; asking for its valuation raises
:class:`PrecisionError` unless the caller accepts the lower bound.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .arith import padic_valuation


class PrecisionError(ArithmeticError):
    pass


def _split(n: int, p: int) -> tuple[int, int]:
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k, n


class PAdic:
    __slots__ = ("p", "v", "u", "ap")

    def __init__(self, p: int, v: int | None, u: int, ap):
        # v is None for an (inexact or exact) zero; ap may be math.inf only then
        self.p = p
        self.v = v
        self.u = u
        self.ap = ap

    # construction -----------------------------------------------------------

    @classmethod
    def zero(cls, p: int, ap=math.inf) -> "PAdic":
        return cls(p, None, 0, ap)

    @classmethod
    def from_rational(cls, q, p: int, rel_prec: int) -> "PAdic":
        q = Fraction(q)
        if q == 0:
            return cls.zero(p)
        v = padic_valuation(q, p)
        num, den = q.numerator, q.denominator
        if v > 0:
            num //= p ** v
        elif v < 0:
            den //= p ** (-v)
        mod = p ** rel_prec
        return cls(p, v, num * pow(den, -1, mod) % mod, v + rel_prec)

    def _coerce(self, o) -> "PAdic":
        if isinstance(o, PAdic):
            if o.p != self.p:
                raise ValueError("mixing different primes")
            return o
        if isinstance(o, (int, Fraction)):
            # enough digits that the constant never limits the result
            base = self.ap if self.ap != math.inf else 0
            rel = max(self.rel_prec, 1) + abs(base) + 2 + abs(padic_valuation(o, self.p) if o else 0)
            return PAdic.from_rational(o, self.p, int(rel))
        return NotImplemented

    # queries -----------------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.v is None

    @property
    def rel_prec(self) -> int:
        return 0 if self.v is None else self.ap - self.v

    def valuation(self, allow_inexact_zero: bool = True):
        """Exact valuation, or +inf for a zero known to be p-adically integral.

        An inexact zero with ap >= 0 has |value| <= 1, which is all the escape
        tests need; with ap < 0 the value is undetermined.
        """
        if self.v is not None:
            return self.v
        if self.ap == math.inf or (allow_inexact_zero and self.ap >= 0):
            return math.inf
        raise PrecisionError(f"value is only known modulo {self.p}^{self.ap}")

    # arithmetic --------------------------------------------------------------

    def _normalise(self, m: int, s: int, ap) -> "PAdic":
        """Build p^m * s known modulo p^ap."""
        if ap <= m:
            return PAdic.zero(self.p, ap)
        mod = self.p ** (ap - m)
        s %= mod
        if s == 0:
            return PAdic.zero(self.p, ap)
        k, u = _split(s, self.p)
        return PAdic(self.p, m + k, u % self.p ** (ap - m - k), ap)

    def __add__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return o
        ap = min(self.ap, o.ap)
        terms = [t for t in (self, o) if t.v is not None]
        if not terms:
            return PAdic.zero(self.p, ap)
        m = min(t.v for t in terms)
        s = sum(t.u * self.p ** (t.v - m) for t in terms)
        return self._normalise(m, s, ap)

    __radd__ = __add__

    def __neg__(self):
        if self.v is None:
            return self
        return PAdic(self.p, self.v, (-self.u) % self.p ** self.rel_prec, self.ap)

    def __sub__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return o
        if self.v is None or o.v is None:
            if self.ap == math.inf and self.v is None or o.ap == math.inf and o.v is None:
                return PAdic.zero(self.p)
            sa = self.v if self.v is not None else self.ap
            so = o.v if o.v is not None else o.ap
            return PAdic.zero(self.p, min(self.ap + so, o.ap + sa))
        r = min(self.rel_prec, o.rel_prec)
        v = self.v + o.v
        return PAdic(self.p, v, self.u * o.u % self.p ** r, v + r)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = self._coerce(o)
        if o is NotImplemented:
            return o
        if o.v is None:
            raise ZeroDivisionError("division by a p-adic zero")
        if self.v is None:
            return PAdic.zero(self.p, self.ap - o.v)
        r = min(self.rel_prec, o.rel_prec)
        mod = self.p ** r
        v = self.v - o.v
        return PAdic(self.p, v, self.u * pow(o.u, -1, mod) % mod, v + r)

    def __rtruediv__(self, o):
        return self._coerce(o) / self

    def __eq__(self, o):
        if not isinstance(o, PAdic):
            return NotImplemented
        return (self.p, self.v, self.u, self.ap) == (o.p, o.v, o.u, o.ap)

    def __hash__(self):
        return hash((self.p, self.v, self.u, self.ap))

    def __repr__(self):
        if self.v is None:
            return f"O({self.p}^{self.ap})"
        return f"{self.p}^{self.v}*{self.u} + O({self.p}^{self.ap})"
