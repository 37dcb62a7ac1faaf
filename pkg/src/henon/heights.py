"""Escape regions, local canonical heights and certified global canonical heights
for Henon maps over Q.

At a finite place the local height is an exact rational multiple of log p:
once phi^N(P) lies in the escape region B+_p, lambda+(P) = d^-N log|y_N|_p.
At the archimedean place only an enclosure is available; it comes from
interval iteration past the escape step and the bounds on the error term
epsilon in log|y| + epsilon, shrunk by d^-N.

Orbits are followed in exact rationals while the coordinates stay small.
Past ``HeightConfig.exact_bits`` the finite places switch to fixed-precision
p-adic arithmetic (:mod:`henon.padic`) and the archimedean place to interval
arithmetic; valuations are never propagated on their own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable

from mpmath import mpf
from mpmath.ctx_iv import MPIntervalContext

from .arith import ARCH, INF, QPlace, as_fraction, log_fraction, padic_valuation, relevant_primes
from .core import HenonMap, PlanePoint, apply, apply_inverse
from .padic import PAdic, PrecisionError


class Direction(str, Enum):
    PLUS = "+"
    MINUS = "-"


class CapExceeded(RuntimeError):
    """Iteration budget exhausted before the result could be certified."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class HeightConfig:
    arch_tolerance: float = 1e-9
    pre_escape_cap: int = 64
    # bit size of a point above which exact iteration hands over
    exact_bits: int = 1 << 13
    interval_prec: int = 256


DEFAULT_CONFIG = HeightConfig()


@dataclass(frozen=True)
class LocalHeightValue:
    """One local canonical height.

    ``kind`` is ``"exact_log"`` (value = coeff * log base, finite places only),
    ``"interval"`` (archimedean enclosure [lo, hi]) or ``"zero"``.  A zero with
    ``heuristic`` set was not certified: the orbit stayed bounded up to the cap
    and the true value lies in [0, allowance].
    """

    place: QPlace
    direction: Direction
    kind: str
    coeff: Fraction | None = None
    lo: float = 0.0
    hi: float = 0.0
    heuristic: bool = False
    allowance: float = 0.0
    escape_step: int | None = None

    @property
    def base(self) -> int | None:
        return self.place.p if self.kind == "exact_log" else None

    @property
    def lower(self) -> float:
        if self.kind == "exact_log":
            return float(self.coeff) * math.log(self.place.p)
        return self.lo

    @property
    def upper(self) -> float:
        if self.kind == "exact_log":
            return float(self.coeff) * math.log(self.place.p)
        if self.kind == "zero":
            return self.allowance
        return self.hi

    @property
    def value(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def radius(self) -> float:
        return 0.5 * (self.upper - self.lower)

    @property
    def is_certified_zero(self) -> bool:
        return self.kind == "zero" and not self.heuristic

    def to_dict(self) -> dict:
        d = {
            "place": str(self.place),
            "direction": self.direction.value,
            "kind": self.kind,
            "value": self.value,
            "lo": self.lower,
            "hi": self.upper,
            "heuristic": self.heuristic,
            "escape_step": self.escape_step,
        }
        if self.kind == "exact_log":
            d["coeff"] = str(self.coeff)
            d["base"] = self.place.p
        return d


@dataclass(frozen=True)
class CanonicalHeightValue:
    h_plus: float
    h_minus: float
    total: float
    error_radius: float
    local_breakdown: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "h_plus": self.h_plus,
            "h_minus": self.h_minus,
            "total": self.total,
            "error_radius": self.error_radius,
            "locals": [lv.to_dict() for lv in self.local_breakdown],
        }


# --- escape regions -----------------------------------------------------------


def c_f_v_exponent(f_coeffs, p: int) -> Fraction:
    """log_p C_{f,p}: the exponent e with C_{f,p} = p^e (exact)."""
    d = len(f_coeffs)
    e = Fraction(0)
    for i, c in enumerate(f_coeffs):
        if c != 0:
            e = max(e, Fraction(-padic_valuation(c, p), d - i))
    return e


def c_f_v(f_coeffs, v: QPlace) -> float:
    """C_{f,v} = max(|b_i|_v^(1/(d-i)), 1) over 0 <= i < d."""
    if v.p is not None:
        return float(v.p) ** float(c_f_v_exponent(f_coeffs, v.p))
    d = len(f_coeffs)
    out = 1.0
    for i, c in enumerate(f_coeffs):
        c = as_fraction(c)
        if c != 0:
            out = max(out, math.exp(log_fraction(abs(c)) / (d - i)))
    return out


def _val(q, p: int):
    if isinstance(q, PAdic):
        return q.valuation()
    return padic_valuation(q, p)


def _neg_val(q, p: int):
    """log_p |q|_p = -v_p(q), with -inf for zero."""
    v = _val(q, p)
    return -INF if v == INF else -v


def _finite_escape(phi: HenonMap, P: PlanePoint, p: int, direction: Direction) -> bool:
    lx, ly = _neg_val(P.x, p), _neg_val(P.y, p)
    if phi.is_quadratic_normal:
        lb = _neg_val(phi.b, p)
        if direction is Direction.PLUS:
            return 2 * ly > max(lx, lb, 0)
        return 2 * lx > max(ly, lb, 0)
    d = phi.d
    la = _neg_val(phi.a, p)
    rhs = max(Fraction(0), c_f_v_exponent(phi.f_coeffs, p), Fraction(la) / (d - 1))
    if direction is Direction.PLUS:
        return ly > max(rhs, lx / d)
    return lx - la > max(rhs, ly / d)


def _arch_escape_exact(phi: HenonMap, P: PlanePoint, direction: Direction) -> bool:
    x, y = abs(P.x), abs(P.y)
    if phi.is_quadratic_normal:
        b = abs(phi.b)
        if direction is Direction.PLUS:
            return y * y > 3 * max(x, b, 1)
        return x * x > 3 * max(y, b, 1)
    d, a = phi.d, abs(phi.a)
    k = d + 2
    if direction is Direction.PLUS:
        big, small = y, x
    else:
        big, small = x / a, y
    if not big > k:
        return False
    if not big ** d > k ** d * small:
        return False
    if not big ** (d - 1) > k ** (d - 1) * a:
        return False
    return all(big ** (d - i) > k ** (d - i) * abs(c) for i, c in enumerate(phi.f_coeffs))


def in_escape_plus(phi: HenonMap, P: PlanePoint, v: QPlace) -> bool:
    """Membership of P in B+_v.  Uses the sharper quadratic region for (y, x + y^2 + b)."""
    if v.p is None:
        return _arch_escape_exact(phi, P, Direction.PLUS)
    return _finite_escape(phi, P, v.p, Direction.PLUS)


def in_escape_minus(phi: HenonMap, P: PlanePoint, v: QPlace) -> bool:
    if v.p is None:
        return _arch_escape_exact(phi, P, Direction.MINUS)
    return _finite_escape(phi, P, v.p, Direction.MINUS)


def in_escape(phi, P, v, direction: Direction) -> bool:
    return in_escape_plus(phi, P, v) if direction is Direction.PLUS else in_escape_minus(phi, P, v)


def epsilon_bounds(phi: HenonMap) -> tuple[float, float]:
    """Bounds on lambda(P) - log|y| (or its minus analogue) on the archimedean escape region."""
    if phi.is_quadratic_normal:
        lo, hi = -math.log(3.0), math.log(5.0 / 3.0)
    else:
        d = phi.d
        lo, hi = -math.log(d + 2) / (d - 1), math.log((2 * d + 3) / (d + 2)) / (d - 1)
    # widen by a few ulps: the float logs are not correctly rounded
    return lo - 4 * 2.0 ** -52 * abs(lo), hi + 4 * 2.0 ** -52 * abs(hi)


# --- helpers ----------------------------------------------------------------


def _bits(P: PlanePoint) -> int:
    return sum(q.numerator.bit_length() + q.denominator.bit_length() for q in P)


def _step_fn(direction: Direction) -> Callable:
    return apply if direction is Direction.PLUS else apply_inverse


def good_reduction(phi: HenonMap, p: int) -> bool:
    return all(padic_valuation(c, p) >= 0 for c in phi.f_coeffs) and padic_valuation(phi.a, p) == 0


def _growth_log_const(phi: HenonMap, v: QPlace, direction: Direction) -> float:
    """log M with ||phi^{+-1}(Q)||_v <= M max(1, ||Q||_v)^d and M >= 1.

    Then lambda(Q) <= log+||Q||_v + log(M)/(d-1) for every Q.
    """
    d = phi.d
    if v.p is not None:
        p = v.p
        la = -padic_valuation(phi.a, p)
        terms = [0]
        if direction is Direction.PLUS:
            terms.append(la)
            terms += [-padic_valuation(c, p) for c in phi.f_coeffs if c != 0]
        else:
            terms += [-la, -d * la]
            terms += [-padic_valuation(c, p) - i * la for i, c in enumerate(phi.f_coeffs) if c != 0]
        return max(terms) * math.log(p)
    a = float(abs(as_fraction(phi.a)))
    bs = [float(abs(as_fraction(c))) for c in phi.f_coeffs]
    if direction is Direction.PLUS:
        M = max(a, 2.0 + sum(bs), 1.0)
    else:
        A = max(1.0, 1.0 / a)
        M = 1.0 + A ** d + sum(b * A ** i for i, b in enumerate(bs))
    return math.log(M)


def _log_plus_norm_finite(P: PlanePoint, p: int) -> float:
    return max(0, _neg_val(P.x, p), _neg_val(P.y, p)) * math.log(p)


# --- finite places ----------------------------------------------------------


def _exact_log_value(phi, Q, p, n, direction, v) -> LocalHeightValue:
    d = phi.d
    if direction is Direction.PLUS:
        coeff = Fraction(-_val(Q.y, p))
    else:
        coeff = Fraction(-_val(Q.x, p)) + Fraction(d, d - 1) * padic_valuation(phi.a, p)
    return LocalHeightValue(v, direction, "exact_log", coeff=coeff / d ** n, escape_step=n)


def _finite_local(phi: HenonMap, P: PlanePoint, v: QPlace, direction: Direction,
                  cfg: HeightConfig) -> LocalHeightValue:
    p = v.p
    if good_reduction(phi, p) and padic_valuation(P.x, p) >= 0 and padic_valuation(P.y, p) >= 0:
        return LocalHeightValue(v, direction, "zero")
    step = _step_fn(direction)
    cap = cfg.pre_escape_cap
    Q, n = P, 0
    while True:
        if _finite_escape(phi, Q, p, direction):
            return _exact_log_value(phi, Q, p, n, direction, v)
        if n == cap:
            return _heuristic_zero(phi, _log_plus_norm_finite(Q, p), v, direction, n)
        if _bits(Q) > cfg.exact_bits:
            break
        Q = step(phi, Q)
        n += 1
        if Q == P:
            return LocalHeightValue(v, direction, "zero")
    return _finite_local_padic(phi, Q, n, v, direction, cfg)


def _finite_local_padic(phi, Q_exact, n0, v, direction, cfg) -> LocalHeightValue:
    p = v.p
    step = _step_fn(direction)
    cap = cfg.pre_escape_cap
    depth = 1 + max(0, *(-padic_valuation(c, p) for c in phi.coefficients() if c != 0),
                    *(-padic_valuation(c, p) for c in Q_exact if c != 0),
                    padic_valuation(phi.a, p))
    prec = (cap - n0 + 4) * depth + 64
    for _attempt in range(4):
        conv = lambda q: PAdic.from_rational(q, p, prec)  # noqa: E731
        phq = phi.map_scalars(conv)
        Q, n = Q_exact.map(conv), n0
        try:
            while True:
                # region shape comes from the rational map, the point is p-adic
                if _finite_escape(phi, Q, p, direction):
                    return _exact_log_value(phi, Q, p, n, direction, v)
                if n == cap:
                    return _heuristic_zero(phi, _log_plus_norm_finite(Q, p), v, direction, n)
                Q = step(phq, Q)
                n += 1
        except PrecisionError:
            prec *= 4
    raise CapExceeded(f"p-adic precision exhausted at p={p}")


def _heuristic_zero(phi, log_plus_norm: float, v, direction, n) -> LocalHeightValue:
    """Uncertified zero after n bounded steps: 0 <= lambda <= d^-n (log+||Q_n|| + log M/(d-1))."""
    bound = (log_plus_norm + _growth_log_const(phi, v, direction) / (phi.d - 1)) / phi.d ** n
    return LocalHeightValue(v, direction, "zero", heuristic=True, allowance=math.nextafter(bound, math.inf),
                            escape_step=None)


# --- archimedean place ------------------------------------------------------


def _iv_ctx(prec: int) -> MPIntervalContext:
    ctx = MPIntervalContext()
    ctx.prec = prec
    return ctx


def _iv_from_rational(iv, q) -> object:
    q = as_fraction(q)
    if q.denominator == 1:
        return iv.mpf(q.numerator)
    return iv.mpf(q.numerator) / iv.mpf(q.denominator)


def _iv_bounds(x) -> tuple[mpf, mpf]:
    lo, hi = x._mpi_
    return mpf(lo), mpf(hi)


def _iv_abs_lo(x):
    lo, hi = _iv_bounds(x)
    if lo > 0:
        return lo
    if hi < 0:
        return -hi
    return mpf(0)


def _iv_abs_hi(x):
    lo, hi = _iv_bounds(x)
    return max(abs(lo), abs(hi))


class _IvMap:
    def __init__(self, phi: HenonMap, iv):
        self.iv = iv
        self.a = _iv_from_rational(iv, phi.a)
        self.bs = [_iv_from_rational(iv, c) for c in phi.f_coeffs]
        self.abs_a = abs(as_fraction(phi.a))
        self.abs_bs = [abs(as_fraction(c)) for c in phi.f_coeffs]

    def f(self, y):
        acc = self.iv.mpf(1)
        for c in reversed(self.bs):
            acc = acc * y + c
        return acc

    def forward(self, x, y):
        return self.a * y, x + self.f(y)

    def backward(self, x, y):
        w = x / self.a
        return y - self.f(w), w


def _arch_escape_certain(phi: HenonMap, ivm: _IvMap, x, y, direction: Direction) -> bool:
    """Certain membership of an interval point in B+_inf (resp. B-_inf)."""
    if phi.is_quadratic_normal:
        b = mpf(ivm.abs_bs[0].numerator) / ivm.abs_bs[0].denominator
        if direction is Direction.PLUS:
            big, small = _iv_abs_lo(y), _iv_abs_hi(x)
        else:
            big, small = _iv_abs_lo(x), _iv_abs_hi(y)
        # a little slack so that float rounding in mpf can only make us doubt
        return big * big > 3 * max(small, b, 1) * (1 + mpf(2) ** (-ivm.iv.prec + 8))
    d = phi.d
    k = d + 2
    a = mpf(ivm.abs_a.numerator) / ivm.abs_a.denominator
    if direction is Direction.PLUS:
        big, small = _iv_abs_lo(y), _iv_abs_hi(x)
    else:
        big, small = _iv_abs_lo(x) / a, _iv_abs_hi(y)
    slack = 1 + mpf(2) ** (-ivm.iv.prec + 8)
    big = big / slack
    if not (big > k and big ** d > k ** d * small and big ** (d - 1) > k ** (d - 1) * a):
        return False
    for i, c in enumerate(ivm.abs_bs):
        c = mpf(c.numerator) / c.denominator
        if not big ** (d - i) > k ** (d - i) * c:
            return False
    return True


def _outward(lo, hi) -> tuple[float, float]:
    return math.nextafter(float(lo), -math.inf), math.nextafter(float(hi), math.inf)


def _arch_local(phi: HenonMap, P: PlanePoint, direction: Direction, cfg: HeightConfig) -> LocalHeightValue:
    step = _step_fn(direction)
    cap = cfg.pre_escape_cap
    Q, n = P, 0
    exact_escape = False
    while True:
        if _arch_escape_exact(phi, Q, direction):
            exact_escape = True
            break
        if n == cap or _bits(Q) > cfg.exact_bits:
            break
        Q = step(phi, Q)
        n += 1
        if Q == P:
            return LocalHeightValue(ARCH, direction, "zero")

    iv = _iv_ctx(cfg.interval_prec)
    ivm = _IvMap(phi, iv)
    ivstep = ivm.forward if direction is Direction.PLUS else ivm.backward
    x, y = _iv_from_rational(iv, Q.x), _iv_from_rational(iv, Q.y)
    escaped = exact_escape
    while not escaped:
        if n >= cap:
            break
        x, y = ivstep(x, y)
        n += 1
        if _arch_escape_certain(phi, ivm, x, y, direction):
            escaped = True
            break
        lo, hi = _iv_bounds(x)
        if not (hi - lo < mpf(1)):
            # enclosure too wide to follow the orbit any further
            break
    if not escaped:
        norm_hi = max(_iv_abs_hi(x), _iv_abs_hi(y))
        lp = float(max(mpf(0), mpf(iv.log(iv.mpf(norm_hi)).b))) if norm_hi > 0 else 0.0
        return _heuristic_zero(phi, lp, ARCH, direction, n)

    d = phi.d
    eps_lo, eps_hi = epsilon_bounds(phi)
    log_a = iv.log(abs(ivm.a)) * (mpf(d) / (d - 1))
    escape_step = n
    while True:
        if direction is Direction.PLUS:
            L = iv.log(abs(y))
        else:
            L = iv.log(abs(x)) - log_a
        scale = mpf(d) ** n
        lo = (L + eps_lo) / scale
        hi = (L + eps_hi) / scale
        lo_v = max(mpf(0), _iv_bounds(lo)[0])
        hi_v = _iv_bounds(hi)[1]
        if hi_v - lo_v < cfg.arch_tolerance or n >= escape_step + 200:
            lo_f, hi_f = _outward(lo_v, hi_v)
            return LocalHeightValue(ARCH, direction, "interval", lo=max(0.0, lo_f), hi=hi_f,
                                    escape_step=escape_step)
        x, y = ivstep(x, y)
        n += 1


def local_height(phi: HenonMap, P: PlanePoint, v: QPlace, direction: Direction | str = Direction.PLUS,
                 config: HeightConfig = DEFAULT_CONFIG) -> LocalHeightValue:
    """lambda+_v(P) or lambda-_v(P) for a Henon map over Q."""
    direction = Direction(direction)
    P = PlanePoint(as_fraction(P.x), as_fraction(P.y))
    if v.p is None:
        return _arch_local(phi, P, direction, config)
    return _finite_local(phi, P, v, direction, config)


def height_places(phi: HenonMap, P: PlanePoint) -> list[QPlace]:
    """Infinity plus every prime where phi has bad reduction or P is non-integral."""
    primes = set(relevant_primes(phi.a))
    for q in list(phi.f_coeffs) + [P.x, P.y]:
        q = as_fraction(q)
        primes.update(relevant_primes(Fraction(1, q.denominator)))
    return [ARCH] + [QPlace(p) for p in sorted(primes)]


def canonical_height(phi: HenonMap, P: PlanePoint, config: HeightConfig = DEFAULT_CONFIG) -> CanonicalHeightValue:
    """h+(P), h-(P) and h(P) = h+ + h- as midpoints of certified enclosures."""
    P = PlanePoint(as_fraction(P.x), as_fraction(P.y))
    locals_: list[LocalHeightValue] = []
    for v in height_places(phi, P):
        for direction in (Direction.PLUS, Direction.MINUS):
            locals_.append(local_height(phi, P, v, direction, config))
    sums = {}
    for direction in Direction:
        parts = [lv for lv in locals_ if lv.direction is direction]
        lo = sum(lv.lower for lv in parts)
        hi = sum(lv.upper for lv in parts)
        # floating-point summation slack
        slack = 4 * 2.0 ** -52 * sum(abs(lv.upper) for lv in parts) * len(parts)
        sums[direction] = (max(0.0, lo - slack), hi + slack)
    (pl, ph), (ml, mh) = sums[Direction.PLUS], sums[Direction.MINUS]
    h_plus, h_minus = 0.5 * (pl + ph), 0.5 * (ml + mh)
    radius = 0.5 * (ph - pl) + 0.5 * (mh - ml)
    return CanonicalHeightValue(h_plus, h_minus, h_plus + h_minus, radius, tuple(locals_))


def confinement_check(phi: HenonMap, P: PlanePoint) -> bool:
    """||x, y||_v <= (3)_v max(1, |b|_v)^(1/2) at infinity and at every prime
    dividing a denominator of x, y or b.  Quadratic maps (y, x + y^2 + b) only.
    """
    if not phi.is_quadratic_normal:
        raise ValueError("confinement bound is stated for (y, x + y^2 + b)")
    b = as_fraction(phi.b)
    x, y = as_fraction(P.x), as_fraction(P.y)
    norm = max(abs(x), abs(y))
    if norm * norm > 9 * max(Fraction(1), abs(b)):
        return False
    for p in relevant_primes(Fraction(1, x.denominator), Fraction(1, y.denominator), Fraction(1, b.denominator)):
        e = max(0, -padic_valuation(x, p) if x else 0, -padic_valuation(y, p) if y else 0)
        eb = max(0, -padic_valuation(b, p) if b else 0)
        if 2 * e > eb:
            return False
    return True


def escapes_confinement(phi: HenonMap) -> Callable[[PlanePoint], bool]:
    """Escape test for :func:`henon.core.orbit`: leaving the confinement region."""
    return lambda P: not confinement_check(phi, P)


def escapes_somewhere(phi: HenonMap) -> Callable[[PlanePoint], bool]:
    """Predicate certifying non-periodicity for any map: P lies in an
    archimedean escape region, or (quadratic maps) outside the confinement set."""
    confined = phi.is_quadratic_normal

    def test(P: PlanePoint) -> bool:
        if confined and not confinement_check(phi, P):
            return True
        return _arch_escape_exact(phi, P, Direction.PLUS) or _arch_escape_exact(phi, P, Direction.MINUS)

    return test
