"""Henon maps phi(x, y) = (a*y, x + f(y)) as values over an arbitrary scalar field.

Scalars only need ``+ - * /``, ``==`` and multiplication by Python ints, so the
same code runs over :class:`~fractions.Fraction`, the prime-field elements in
:mod:`henon.modp`, rational functions from :mod:`henon.funcfield` and the
fixed-precision p-adic numbers in :mod:`henon.padic`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Generic, Sequence, TypeVar

S = TypeVar("S")


class NotACycle(ValueError):
    pass


def _one_like(a):
    return (a - a) + 1


def _zero_like(a):
    return a - a


@dataclass(frozen=True)
class PlanePoint(Generic[S]):
    x: S
    y: S

    def __iter__(self):
        yield self.x
        yield self.y

    def map(self, fn: Callable[[S], Any]) -> "PlanePoint":
        return PlanePoint(fn(self.x), fn(self.y))

    def __str__(self) -> str:
        return f"({self.x}, {self.y})"


def point(x, y) -> PlanePoint:
    return PlanePoint(x, y)


@dataclass(frozen=True)
class HenonMap(Generic[S]):
    """phi(x, y) = (a y, x + f(y)) with f(y) = y^d + b_{d-1} y^{d-1} + ... + b_0.

    ``f_coeffs`` lists ``[b_0, ..., b_{d-1}]``; the leading 1 is implicit.
    """

    a: S
    f_coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "f_coeffs", tuple(self.f_coeffs))
        if len(self.f_coeffs) < 2:
            raise ValueError("degree must be at least 2")
        if self.a == _zero_like(self.a):
            raise ValueError("a must be nonzero")

    @classmethod
    def quadratic(cls, b, a=None) -> "HenonMap":
        """phi(x, y) = (a y, x + y^2 + b); a defaults to 1."""
        if isinstance(b, int):
            b = Fraction(b)
        if a is None:
            a = _one_like(b)
        return cls(a, (b, _zero_like(b)))

    @property
    def d(self) -> int:
        return len(self.f_coeffs)

    @property
    def is_quadratic_normal(self) -> bool:
        """True for (y, x + y^2 + b): the family with the sharper escape regions."""
        return self.d == 2 and self.a == _one_like(self.a) and self.f_coeffs[1] == _zero_like(self.a)

    @property
    def b(self):
        """Constant term of f (the parameter of the quadratic family)."""
        return self.f_coeffs[0]

    def f(self, y):
        acc = _one_like(self.a)
        for c in reversed(self.f_coeffs):
            acc = acc * y + c
        return acc

    def df(self, y):
        d = self.d
        acc = _one_like(self.a) * d
        for i in range(d - 1, 0, -1):
            acc = acc * y + self.f_coeffs[i] * i
        return acc

    def coefficients(self) -> tuple:
        """All scalars defining the map: a, then b_0..b_{d-1}."""
        return (self.a,) + self.f_coeffs

    def map_scalars(self, fn: Callable) -> "HenonMap":
        return HenonMap(fn(self.a), tuple(fn(c) for c in self.f_coeffs))

    def __call__(self, P: PlanePoint) -> PlanePoint:
        return apply(self, P)

    def __str__(self) -> str:
        terms = [f"y^{self.d}"]
        for i in range(self.d - 1, -1, -1):
            c = self.f_coeffs[i]
            if c != _zero_like(self.a):
                terms.append(f"({c})" + ("" if i == 0 else "*y" if i == 1 else f"*y^{i}"))
        ay = "y" if self.a == _one_like(self.a) else f"({self.a})*y"
        return f"(x, y) -> ({ay}, x + {' + '.join(terms)})"


def apply(phi: HenonMap, P: PlanePoint) -> PlanePoint:
    return PlanePoint(phi.a * P.y, P.x + phi.f(P.y))


def apply_inverse(phi: HenonMap, P: PlanePoint) -> PlanePoint:
    w = P.x / phi.a
    return PlanePoint(P.y - phi.f(w), w)


def iterate(phi: HenonMap, P: PlanePoint, n: int) -> PlanePoint:
    """phi^n(P); negative n iterates the inverse."""
    step = apply if n >= 0 else apply_inverse
    for _ in range(abs(n)):
        P = step(phi, P)
    return P


# --- orbits -----------------------------------------------------------------


class OrbitStatus(str, Enum):
    PERIODIC = "periodic"
    ESCAPED_FORWARD = "escaped_forward"
    ESCAPED_BACKWARD = "escaped_backward"
    CAP_REACHED = "cap_reached"


@dataclass(frozen=True)
class OrbitReport:
    status: OrbitStatus
    step: int | None = None  # period N, or the escape step
    trace: tuple | None = None

    @property
    def period(self) -> int | None:
        return self.step if self.status is OrbitStatus.PERIODIC else None

    def __str__(self) -> str:
        if self.status is OrbitStatus.CAP_REACHED:
            return "CapReached"
        name = {"periodic": "Periodic", "escaped_forward": "EscapedForward",
                "escaped_backward": "EscapedBackward"}[self.status.value]
        return f"{name}({self.step})"


def _divisors(n: int) -> list[int]:
    return [k for k in range(1, n + 1) if n % k == 0]


def orbit(phi: HenonMap, P: PlanePoint, cap: int,
          escape_test: Callable[[PlanePoint], bool] | None = None,
          backward: bool = False, keep_trace: bool = False) -> OrbitReport:
    """Follow the orbit of P for at most ``cap`` steps.

    Only P is held for return detection unless ``keep_trace`` is set.  A return
    at step N is reported as Periodic(N) after re-checking phi^k(P) != P for
    every proper divisor k of N.  ``escape_test`` is a certificate of
    non-periodicity (e.g. leaving the confinement region), evaluated on every
    visited point, P included.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    step = apply_inverse if backward else apply
    escaped = OrbitStatus.ESCAPED_BACKWARD if backward else OrbitStatus.ESCAPED_FORWARD
    trace = [P] if keep_trace else None

    def report(status, k):
        return OrbitReport(status, k, tuple(trace) if keep_trace else None)

    if escape_test is not None and escape_test(P):
        return report(escaped, 0)
    Q = P
    for k in range(1, cap + 1):
        Q = step(phi, Q)
        if Q == P:
            for j in _divisors(k)[:-1]:
                if iterate(phi, P, -j if backward else j) == P:
                    raise AssertionError(f"return at step {k} masks period {j}")
            return report(OrbitStatus.PERIODIC, k)
        if keep_trace:
            trace.append(Q)
        if escape_test is not None and escape_test(Q):
            return report(escaped, k)
    return report(OrbitStatus.CAP_REACHED, None)


def cycle_of(phi: HenonMap, P: PlanePoint, period: int) -> list[PlanePoint]:
    pts = [P]
    for _ in range(period - 1):
        pts.append(apply(phi, pts[-1]))
    return pts


# --- matrices ---------------------------------------------------------------


@dataclass(frozen=True)
class Matrix2(Generic[S]):
    m11: S
    m12: S
    m21: S
    m22: S

    @classmethod
    def identity(cls, like=Fraction(1)) -> "Matrix2":
        one, zero = _one_like(like), _zero_like(like)
        return cls(one, zero, zero, one)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "Matrix2":
        (a, b), (c, d) = rows
        return cls(a, b, c, d)

    def rows(self) -> tuple[tuple, tuple]:
        return ((self.m11, self.m12), (self.m21, self.m22))

    def __matmul__(self, o: "Matrix2") -> "Matrix2":
        return Matrix2(
            self.m11 * o.m11 + self.m12 * o.m21,
            self.m11 * o.m12 + self.m12 * o.m22,
            self.m21 * o.m11 + self.m22 * o.m21,
            self.m21 * o.m12 + self.m22 * o.m22,
        )

    def det(self):
        return self.m11 * self.m22 - self.m12 * self.m21

    def trace(self):
        return self.m11 + self.m22

    def map(self, fn: Callable) -> "Matrix2":
        return Matrix2(fn(self.m11), fn(self.m12), fn(self.m21), fn(self.m22))

    def __str__(self) -> str:
        return f"[[{self.m11}, {self.m12}], [{self.m21}, {self.m22}]]"


def jacobian(phi: HenonMap, P: PlanePoint) -> Matrix2:
    one, zero = _one_like(phi.a), _zero_like(phi.a)
    return Matrix2(zero, phi.a, one, phi.df(P.y))


def multiplier(phi: HenonMap, cycle: Sequence[PlanePoint] | PlanePoint, N: int | None = None) -> Matrix2:
    """Product of Jacobians around a cycle, J(phi^{N-1} Q) leftmost, J(Q) rightmost.

    ``cycle`` is either the list of cycle points starting at Q, or Q alone
    together with its period ``N``.
    """
    if isinstance(cycle, PlanePoint):
        if N is None:
            raise ValueError("period N is required when only the base point is given")
        pts = cycle_of(phi, cycle, N)
    else:
        pts = list(cycle)
        if N is not None and N != len(pts):
            raise NotACycle(f"cycle has {len(pts)} points, expected {N}")
    n = len(pts)
    if n == 0:
        raise NotACycle("empty cycle")
    if len(set(pts)) != n:
        raise NotACycle("cycle points are not distinct")
    for i, Q in enumerate(pts):
        if apply(phi, Q) != pts[(i + 1) % n]:
            raise NotACycle(f"phi does not map point {i} to point {(i + 1) % n}")
    lam = Matrix2.identity(phi.a)
    for Q in pts:
        lam = jacobian(phi, Q) @ lam
    return lam


# --- affine conjugacy -------------------------------------------------------


@dataclass(frozen=True)
class AffineMap:
    """psi(x, y) = (alpha x + beta y + s, gamma x + delta y + t)."""

    alpha: Any
    beta: Any
    gamma: Any
    delta: Any
    s: Any
    t: Any

    @classmethod
    def identity(cls, like=Fraction(1)) -> "AffineMap":
        one, zero = _one_like(like), _zero_like(like)
        return cls(one, zero, zero, one, zero, zero)

    def __call__(self, P: PlanePoint) -> PlanePoint:
        return PlanePoint(self.alpha * P.x + self.beta * P.y + self.s,
                          self.gamma * P.x + self.delta * P.y + self.t)

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """self o inner."""
        A = Matrix2(self.alpha, self.beta, self.gamma, self.delta)
        B = Matrix2(inner.alpha, inner.beta, inner.gamma, inner.delta)
        C = A @ B
        return AffineMap(C.m11, C.m12, C.m21, C.m22,
                         self.alpha * inner.s + self.beta * inner.t + self.s,
                         self.gamma * inner.s + self.delta * inner.t + self.t)

    def inverse(self) -> "AffineMap":
        det = self.alpha * self.delta - self.beta * self.gamma
        if det == _zero_like(det):
            raise ValueError("affine map is not invertible")
        ia, ib = self.delta / det, -self.beta / det
        ic, id_ = -self.gamma / det, self.alpha / det
        return AffineMap(ia, ib, ic, id_, -(ia * self.s + ib * self.t), -(ic * self.s + id_ * self.t))

    @property
    def is_identity(self) -> bool:
        return self == AffineMap.identity(self.alpha)


def _poly_compose_linear(coeffs: Sequence, lam, shift) -> list:
    """Coefficients (low to high) of g(lam*y + shift) for g given low to high."""
    zero = _zero_like(lam)
    out = [zero]
    # Horner in the polynomial ring: acc = acc*(lam*y + shift) + c
    for c in reversed(coeffs):
        nxt = [zero] * (len(out) + 1)
        for i, ai in enumerate(out):
            nxt[i] = nxt[i] + ai * shift
            nxt[i + 1] = nxt[i + 1] + ai * lam
        nxt[0] = nxt[0] + c
        out = nxt
    while len(out) > 1 and out[-1] == zero:
        out.pop()
    return out


def _int_root(m: int, n: int) -> int | None:
    lo, hi = 0, 1 << (m.bit_length() // n + 1)
    while lo < hi:
        mid = (lo + hi) // 2
        if mid ** n < m:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo ** n == m else None


def _exact_root(c: Fraction, n: int) -> Fraction | None:
    """The rational r with r**n == c, if there is one."""
    if n == 1:
        return c
    sign = 1
    if c < 0:
        if n % 2 == 0:
            return None
        sign, c = -1, -c
    roots = []
    for part in (c.numerator, c.denominator):
        r = _int_root(part, n)
        if r is None:
            return None
        roots.append(r)
    return sign * Fraction(roots[0], roots[1])


def conjugacy_normalize(a, g_coeffs: Sequence, depress: bool = False) -> tuple[HenonMap, AffineMap]:
    """Affine-conjugate (a y, x + g(y)) to a Henon map with monic f.

    ``g_coeffs`` lists every coefficient of g, low to high, leading one
    included (it may be any nonzero scalar).  Returns ``(phi2, psi)`` with
    ``phi2 = psi^-1 o phi1 o psi``.  The scaling psi = (lam x, lam y) needs
    lam^(d-1) = 1/lead, which over Q requires an exact rational root.  With
    ``depress`` the y^{d-1} term is also removed by the translation
    psi = (x + a*t, y + t), t = -b_{d-1}/d.
    """
    g = list(g_coeffs)
    d = len(g) - 1
    if d < 2:
        raise ValueError("degree must be at least 2")
    lead = g[-1]
    if lead == _zero_like(lead):
        raise ValueError("leading coefficient must be nonzero")
    one, zero = _one_like(lead), _zero_like(lead)
    psi = AffineMap.identity(lead)
    if lead != one:
        if d == 2:
            lam = one / lead
        elif isinstance(lead, (Fraction, int)):
            lam = _exact_root(Fraction(1) / Fraction(lead), d - 1)
            if lam is None:
                raise ValueError(f"1/{lead} has no rational {d - 1}-th root; conjugacy needs an extension")
        else:
            raise ValueError("non-monic normalisation for d > 2 needs an exact root of the leading coefficient")
        # g2(y) = g(lam y) / lam
        g = [c / lam for c in _poly_compose_linear(g, lam, zero)]
        psi = AffineMap(lam, zero, zero, lam, zero, zero)
    if depress:
        t = -g[d - 1] / d
        if t != zero:
            # f2(y) = f(y + t) + (a - 1) t
            g = _poly_compose_linear(g, one, t)
            g[0] = g[0] + (a - one) * t
            psi = psi.compose(AffineMap(one, zero, zero, one, a * t, t))
    phi2 = HenonMap(a, tuple(g[:d]))
    return phi2, psi
