"""Henon maps over the rational function field Q(t).

Places of Q(t) are the monic irreducible polynomials pi in Q[t] plus the place
at infinity, normalised by |g|_pi = exp(-ord_pi(g) deg pi).  Local canonical
heights at these places are exact rationals, so the divisors D_+ and D_- of a
point and its generic canonical height are computed exactly.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from sympy import Poly, QQ, Symbol, factor_list
from sympy.parsing.sympy_parser import (TokenError, convert_xor, implicit_multiplication_application, parse_expr,
                                        standard_transformations)
from sympy.polys.fields import field as _make_field

from .arith import as_fraction, weil_height
from .core import HenonMap, PlanePoint, apply, apply_inverse
from .heights import CapExceeded, DEFAULT_CONFIG, Direction, HeightConfig, canonical_height

T_SYMBOL = Symbol("t")
_FIELD, _T = _make_field("t", QQ)

DEFAULT_FF_CAP = 12


class ZeroInput(ValueError):
    pass


class UnsupportedNonConstantA(ValueError):
    pass


class DegreeUnsupported(ValueError):
    pass


class PoleAtSample(ValueError):
    pass


def _q(c) -> Fraction:
    """sympy rational -> Fraction."""
    return Fraction(int(c.numerator), int(c.denominator)) if hasattr(c, "numerator") else Fraction(c)


class RatFunc:
    """An element of Q(t): reduced numerator/denominator with monic denominator."""

    __slots__ = ("e",)

    def __init__(self, value=0):
        if isinstance(value, RatFunc):
            self.e = value.e
        elif isinstance(value, Fraction):
            self.e = _FIELD(QQ(value.numerator, value.denominator))
        elif isinstance(value, int):
            self.e = _FIELD(value)
        else:
            self.e = _FIELD(value)

    @classmethod
    def t(cls) -> "RatFunc":
        return cls(_T)

    @classmethod
    def from_coeffs(cls, num: Sequence, den: Sequence = (1,)) -> "RatFunc":
        """From coefficient lists, lowest degree first."""
        n = sum((_FIELD(QQ(*_pair(c))) * _T ** i for i, c in enumerate(num)), _FIELD(0))
        d = sum((_FIELD(QQ(*_pair(c))) * _T ** i for i, c in enumerate(den)), _FIELD(0))
        if d == 0:
            raise ZeroDivisionError("zero denominator")
        return cls(n / d)

    def _polys(self) -> tuple[Poly, Poly]:
        num = Poly(self.e.numer.as_expr(), T_SYMBOL, domain=QQ)
        den = Poly(self.e.denom.as_expr(), T_SYMBOL, domain=QQ)
        lc = den.LC()
        return num.quo_ground(lc), den.monic()

    @property
    def numerator(self) -> Poly:
        return self._polys()[0]

    @property
    def denominator(self) -> Poly:
        return self._polys()[1]

    def numerator_coeffs(self) -> list[Fraction]:
        """Numerator coefficients, lowest degree first (denominator made monic)."""
        return [_q(c) for c in reversed(self.numerator.all_coeffs())]

    def denominator_coeffs(self) -> list[Fraction]:
        return [_q(c) for c in reversed(self.denominator.all_coeffs())]

    @property
    def is_zero(self) -> bool:
        return self.e == 0

    @property
    def is_constant(self) -> bool:
        return self.e.numer.degree() <= 0 and self.e.denom.degree() <= 0

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError(f"{self} is not constant")
        return _q(QQ.convert(self.e.numer.LC) / QQ.convert(self.e.denom.LC)) if not self.is_zero else Fraction(0)

    def evaluate(self, t0) -> Fraction:
        """Value at t = t0; raises PoleAtSample if t0 is a pole."""
        t0 = as_fraction(t0)
        num, den = self._polys()
        dv = _q(den.eval(QQ(t0.numerator, t0.denominator)))
        if dv == 0:
            raise PoleAtSample(f"{self} has a pole at t = {t0}")
        return _q(num.eval(QQ(t0.numerator, t0.denominator))) / dv

    # arithmetic --------------------------------------------------------------

    @staticmethod
    def _coerce(o):
        if isinstance(o, RatFunc):
            return o.e
        if isinstance(o, int):
            return _FIELD(o)
        if isinstance(o, Fraction):
            return _FIELD(QQ(o.numerator, o.denominator))
        return None

    def _wrap(self, e) -> "RatFunc":
        r = RatFunc.__new__(RatFunc)
        r.e = e
        return r

    def __add__(self, o):
        oe = self._coerce(o)
        return NotImplemented if oe is None else self._wrap(self.e + oe)

    __radd__ = __add__

    def __sub__(self, o):
        oe = self._coerce(o)
        return NotImplemented if oe is None else self._wrap(self.e - oe)

    def __rsub__(self, o):
        oe = self._coerce(o)
        return NotImplemented if oe is None else self._wrap(oe - self.e)

    def __mul__(self, o):
        oe = self._coerce(o)
        return NotImplemented if oe is None else self._wrap(self.e * oe)

    __rmul__ = __mul__

    def __truediv__(self, o):
        oe = self._coerce(o)
        if oe is None:
            return NotImplemented
        if oe == 0:
            raise ZeroDivisionError("division by zero in Q(t)")
        return self._wrap(self.e / oe)

    def __rtruediv__(self, o):
        oe = self._coerce(o)
        if oe is None:
            return NotImplemented
        if self.e == 0:
            raise ZeroDivisionError("division by zero in Q(t)")
        return self._wrap(oe / self.e)

    def __neg__(self):
        return self._wrap(-self.e)

    def __pow__(self, n: int):
        return self._wrap(self.e ** n)

    def __eq__(self, o):
        oe = self._coerce(o)
        return NotImplemented if oe is None else self.e == oe

    def __hash__(self):
        return hash(self.e)

    def __str__(self):
        return str(self.e.as_expr()).replace("**", "^")

    def __repr__(self):
        return f"RatFunc({self})"


def _pair(c) -> tuple[int, int]:
    c = as_fraction(c)
    return c.numerator, c.denominator


_ALLOWED = re.compile(r"^[0-9t+\-*/^() ]+$")
_TRANSFORMS = standard_transformations + (implicit_multiplication_application, convert_xor)


def _parse(text: str, names: dict):
    try:
        return parse_expr(text, local_dict=names, transformations=_TRANSFORMS)
    except (SyntaxError, TokenError, TypeError) as exc:
        raise ValueError(f"cannot parse {text!r}") from exc


def parse_ratfunc(text: str) -> RatFunc:
    """Parse an element of Q(t) such as ``t^2+2t``, ``(t^2+1)/t^3`` or ``-9/16``."""
    text = text.strip()
    if not text or not _ALLOWED.match(text):
        raise ValueError(f"not a rational function of t: {text!r}")
    expr = _parse(text, {"t": T_SYMBOL})
    if expr.free_symbols - {T_SYMBOL}:
        raise ValueError(f"unexpected symbols in {text!r}")
    num, den = expr.together().as_numer_denom()
    n = Poly(num, T_SYMBOL, domain=QQ)
    d = Poly(den, T_SYMBOL, domain=QQ)
    if d.is_zero:
        raise ZeroDivisionError(f"zero denominator in {text!r}")
    return RatFunc.from_coeffs([_q(c) for c in reversed(n.all_coeffs())], [_q(c) for c in reversed(d.all_coeffs())])


def parse_ff_point(text: str) -> PlanePoint:
    parts = _split_top_level(text)
    if len(parts) != 2:
        raise ValueError(f"expected a point 'x,y', got {text!r}")
    return PlanePoint(parse_ratfunc(parts[0]), parse_ratfunc(parts[1]))


def _split_top_level(text: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
            continue
        depth += (ch == "(") - (ch == ")")
        cur.append(ch)
    out.append("".join(cur))
    return out


def parse_f_polynomial(text: str) -> list[RatFunc]:
    """Coefficients [b_0, ..., b_{d-1}] of a monic polynomial in y over Q(t), e.g. ``y^2+2ty+t^2``."""
    y = Symbol("y")
    if not re.match(r"^[0-9ty+\-*/^() ]+$", text.strip()):
        raise ValueError(f"not a polynomial in y over Q(t): {text!r}")
    expr = _parse(text, {"t": T_SYMBOL, "y": y})
    if expr.free_symbols - {T_SYMBOL, y}:
        raise ValueError(f"unexpected symbols in {text!r}")
    P = Poly(expr, y)
    d = P.degree()
    if d < 2:
        raise ValueError("f must have degree at least 2 in y")
    coeffs = P.all_coeffs()
    lead = coeffs[0]
    if lead != 1:
        raise ValueError("f must be monic in y")
    out = []
    for c in reversed(coeffs[1:]):
        out.append(parse_ratfunc(str(c).replace("**", "^")) if c != 0 else RatFunc(0))
    return out


# --- places -----------------------------------------------------------------


@dataclass(frozen=True, order=True)
class FFPlace:
    """A place of Q(t): a monic irreducible pi (coefficients lowest first) or infinity (None)."""

    pi: tuple | None

    @classmethod
    def infinity(cls) -> "FFPlace":
        return cls(None)

    @classmethod
    def finite(cls, poly) -> "FFPlace":
        if isinstance(poly, RatFunc):
            if poly.denominator.degree() != 0:
                raise ValueError("a place is given by a polynomial")
            poly = poly.numerator
        elif not isinstance(poly, Poly):
            poly = Poly(list(reversed([QQ(*_pair(c)) for c in poly])), T_SYMBOL, domain=QQ)
        if poly.degree() < 1:
            raise ValueError("a finite place needs a polynomial of positive degree")
        if not poly.is_irreducible:
            raise ValueError(f"{poly.as_expr()} is not irreducible over Q")
        poly = poly.monic()
        return cls(tuple(_q(c) for c in reversed(poly.all_coeffs())))

    @classmethod
    def parse(cls, text: str) -> "FFPlace":
        text = text.strip()
        if text in ("inf", "infinity", "oo"):
            return cls.infinity()
        return cls.finite(parse_ratfunc(text.strip("()")))

    @property
    def is_infinite(self) -> bool:
        return self.pi is None

    @property
    def degree(self) -> int:
        return 1 if self.pi is None else len(self.pi) - 1

    def poly(self) -> Poly:
        return Poly(list(reversed([QQ(*_pair(c)) for c in self.pi])), T_SYMBOL, domain=QQ)

    def sort_key(self):
        return (0, 0, ()) if self.pi is None else (1, self.degree, self.pi)

    def __str__(self) -> str:
        if self.pi is None:
            return "inf"
        return "(" + str(self.poly().as_expr()).replace("**", "^") + ")"


INFINITY = FFPlace.infinity()


def _multiplicity(P: Poly, pi: Poly) -> int:
    k = 0
    while True:
        q, r = P.div(pi)
        if not r.is_zero:
            return k
        P = q
        k += 1


def ord_at_place(g, beta: FFPlace) -> int:
    g = RatFunc(g)
    if g.is_zero:
        raise ZeroInput("ord of zero is undefined")
    num, den = g._polys()
    if beta.is_infinite:
        return den.degree() - num.degree()
    pi = beta.poly()
    return _multiplicity(num, pi) - _multiplicity(den, pi)


def log_abs_at_place(g, beta: FFPlace) -> Fraction:
    """log |g|_beta = -ord_beta(g) deg beta (exact; -inf for zero)."""
    g = RatFunc(g)
    if g.is_zero:
        return -float("inf")  # type: ignore[return-value]
    return Fraction(-ord_at_place(g, beta) * beta.degree)


def _neg_ord(g, beta: FFPlace):
    """-ord_beta(g), with -inf for zero: the place's log-size in units of deg beta."""
    g = RatFunc(g)
    return -float("inf") if g.is_zero else -ord_at_place(g, beta)


def _irreducible_factors(P: Poly) -> list[FFPlace]:
    if P.degree() < 1:
        return []
    _, facs = factor_list(P.as_expr(), T_SYMBOL, domain=QQ)
    return [FFPlace.finite(Poly(f, T_SYMBOL, domain=QQ)) for f, _ in facs]


def relevant_places(phi: HenonMap, P: PlanePoint | None = None) -> list[FFPlace]:
    """Infinity plus every place where a, 1/a, a coefficient or a coordinate is non-integral."""
    places = {INFINITY}
    a = RatFunc(phi.a)
    places.update(_irreducible_factors(a.numerator))
    items = [a, *map(RatFunc, phi.f_coeffs)]
    if P is not None:
        items += [RatFunc(P.x), RatFunc(P.y)]
    for g in items:
        if not g.is_zero:
            places.update(_irreducible_factors(g.denominator))
    return sorted(places, key=FFPlace.sort_key)


# --- divisors ---------------------------------------------------------------


@dataclass
class QDivisor:
    """A finitely supported Q-linear combination of places."""

    weights: dict = field(default_factory=dict)

    def add(self, place: FFPlace, w: Fraction) -> None:
        w = self.weights.get(place, Fraction(0)) + w
        if w == 0:
            self.weights.pop(place, None)
        else:
            self.weights[place] = w

    @property
    def degree(self) -> Fraction:
        return sum((w * pl.degree for pl, w in self.weights.items()), Fraction(0))

    def items(self):
        return sorted(self.weights.items(), key=lambda kv: kv[0].sort_key())

    def to_list(self) -> list[dict]:
        return [{"place": str(pl), "weight": str(w), "degree": pl.degree} for pl, w in self.items()]

    def __eq__(self, o):
        return isinstance(o, QDivisor) and self.weights == o.weights

    def __str__(self) -> str:
        if not self.weights:
            return "0"
        return " + ".join(f"{w}({pl})" for pl, w in self.items())


@dataclass(frozen=True)
class FFLocalHeight:
    """lambda at one place, as a weight per geometric point; lambda_beta = weight * deg beta."""

    place: FFPlace
    direction: Direction
    weight: Fraction
    escape_step: int | None  # None when certified zero without escaping


def _ff_escape(phi: HenonMap, P: PlanePoint, beta: FFPlace, direction: Direction) -> bool:
    lx, ly = _neg_ord(P.x, beta), _neg_ord(P.y, beta)
    if phi.is_quadratic_normal:
        lb = _neg_ord(phi.b, beta)
        if direction is Direction.PLUS:
            return 2 * ly > max(lx, lb, 0)
        return 2 * lx > max(ly, lb, 0)
    d = phi.d
    la = _neg_ord(phi.a, beta)
    c = Fraction(0)
    for i, bi in enumerate(phi.f_coeffs):
        if not RatFunc(bi).is_zero:
            c = max(c, Fraction(_neg_ord(bi, beta), d - i))
    rhs = max(c, Fraction(la) / (d - 1))
    if direction is Direction.PLUS:
        return ly > max(rhs, lx / d)
    return lx - la > max(rhs, ly / d)


def _integral_at(g, beta: FFPlace) -> bool:
    g = RatFunc(g)
    return g.is_zero or ord_at_place(g, beta) >= 0


def _good_at(phi: HenonMap, P: PlanePoint, beta: FFPlace) -> bool:
    return (ord_at_place(phi.a, beta) == 0 and all(_integral_at(c, beta) for c in phi.f_coeffs)
            and _integral_at(P.x, beta) and _integral_at(P.y, beta))


def ff_local_height(phi: HenonMap, P: PlanePoint, beta: FFPlace, direction: Direction | str = Direction.PLUS,
                    cap: int = DEFAULT_FF_CAP) -> FFLocalHeight:
    """Exact local canonical height at beta by iterating into the escape region.

    Raises CapExceeded when the orbit neither escapes nor returns within ``cap`` steps.
    """
    direction = Direction(direction)
    if _good_at(phi, P, beta):
        return FFLocalHeight(beta, direction, Fraction(0), None)
    step = apply if direction is Direction.PLUS else apply_inverse
    d = phi.d
    Q = P
    for n in range(cap + 1):
        if _ff_escape(phi, Q, beta, direction):
            if direction is Direction.PLUS:
                w = Fraction(_neg_ord(Q.y, beta), d ** n)
            else:
                w = (Fraction(_neg_ord(Q.x, beta)) - Fraction(d, d - 1) * _neg_ord(phi.a, beta)) / d ** n
            return FFLocalHeight(beta, direction, w, n)
        if n == cap:
            break
        Q = step(phi, Q)
        if Q == P:
            return FFLocalHeight(beta, direction, Fraction(0), None)
    raise CapExceeded(f"orbit did not reach the escape region at {beta} within {cap} steps")


def height_divisors(phi: HenonMap, P: PlanePoint, cap: int = DEFAULT_FF_CAP) -> tuple[QDivisor, QDivisor]:
    """(D_+, D_-): places weighted by the local canonical heights of P.

    On CapExceeded the exception carries ``partial = (D_+, D_-, failed_place, direction)``.
    """
    phi, P = _as_ff(phi, P)
    Dp, Dm = QDivisor(), QDivisor()
    for beta in relevant_places(phi, P):
        for direction, D in ((Direction.PLUS, Dp), (Direction.MINUS, Dm)):
            try:
                lam = ff_local_height(phi, P, beta, direction, cap)
            except CapExceeded as exc:
                exc.partial = (Dp, Dm, beta, direction)
                raise
            D.add(beta, lam.weight)
    return Dp, Dm


def generic_canonical_height(phi: HenonMap, P: PlanePoint, cap: int = DEFAULT_FF_CAP) -> Fraction:
    Dp, Dm = height_divisors(phi, P, cap)
    return Dp.degree + Dm.degree


def _as_ff(phi: HenonMap, P: PlanePoint | None = None):
    phi = phi.map_scalars(RatFunc)
    if P is None:
        return phi
    return phi, PlanePoint(RatFunc(P.x), RatFunc(P.y))


# --- isotriviality ------------------------------------------------------------


def _f_coeffs_of(f) -> tuple[list[RatFunc], RatFunc | None]:
    if isinstance(f, HenonMap):
        return [RatFunc(c) for c in f.f_coeffs], RatFunc(f.a)
    return [RatFunc(c) for c in f], None


def depressed_coefficients(f_coeffs: Sequence) -> list[RatFunc]:
    """[c_0, ..., c_{d-1}] of f(y + alpha) with alpha = -b_{d-1}/d, so c_{d-1} = 0."""
    coeffs = [RatFunc(c) for c in f_coeffs] + [RatFunc(1)]
    d = len(coeffs) - 1
    alpha = -coeffs[d - 1] / d
    # Horner in Q(t)[y]: acc = acc*(y + alpha) + c
    out = [RatFunc(0)]
    for c in reversed(coeffs):
        nxt = [RatFunc(0)] * (len(out) + 1)
        for i, ai in enumerate(out):
            nxt[i] = nxt[i] + ai * alpha
            nxt[i + 1] = nxt[i + 1] + ai
        nxt[0] = nxt[0] + c
        out = nxt
    return out[:d]


def is_isotrivial(f, a=None) -> bool:
    """True iff the map becomes defined over Q after translating y.

    ``f`` is a HenonMap or the list [b_0, ..., b_{d-1}] of a monic f.
    Only constant a is supported.
    """
    coeffs, a_from_map = _f_coeffs_of(f)
    a = RatFunc(a if a is not None else (a_from_map if a_from_map is not None else 1))
    if a.is_zero or not a.is_constant:
        raise UnsupportedNonConstantA(f"a = {a} must be a nonzero constant")
    return all(c.is_constant for c in depressed_coefficients(coeffs))


def rho_exceeds_one(f, beta: FFPlace) -> bool:
    """Whether the root separation of y^2 + b exceeds 1 at beta (quadratic f only).

    The roots differ by 2 sqrt(-b), so rho > 1 exactly when b has a pole at beta.
    A linear term is removed first by translation.
    """
    coeffs, _ = _f_coeffs_of(f)
    if len(coeffs) != 2:
        raise DegreeUnsupported("root separation is only implemented for quadratic f")
    b = depressed_coefficients(coeffs)[0]
    return not b.is_zero and ord_at_place(b, beta) < 0


# --- specialisation ------------------------------------------------------------


@dataclass(frozen=True)
class SpecializationRow:
    t0: Fraction
    h_t0: float | None
    hhat: float | None
    error_radius: float | None
    ratio: float | None
    status: str  # ok | pole | cap | degenerate

    def to_dict(self) -> dict:
        return {"t0": str(self.t0), "h_t0": self.h_t0, "hhat": self.hhat, "error_radius": self.error_radius,
                "ratio": self.ratio, "status": self.status}


def specialize(phi: HenonMap, P: PlanePoint, t0) -> tuple[HenonMap, PlanePoint]:
    """The map and point over Q at t = t0 (PoleAtSample if undefined there)."""
    phi, P = _as_ff(phi, P)
    a = phi.a.evaluate(t0)
    if a == 0:
        raise PoleAtSample(f"a vanishes at t = {t0}")
    spec = HenonMap(a, tuple(c.evaluate(t0) for c in phi.f_coeffs))
    return spec, PlanePoint(P.x.evaluate(t0), P.y.evaluate(t0))


def specialization_row(phi: HenonMap, P: PlanePoint, t0, config: HeightConfig = DEFAULT_CONFIG) -> SpecializationRow:
    t0 = as_fraction(t0)
    h = weil_height(t0)
    try:
        spec, Q = specialize(phi, P, t0)
    except PoleAtSample:
        return SpecializationRow(t0, h, None, None, None, "pole")
    try:
        val = canonical_height(spec, Q, config)
    except CapExceeded:
        return SpecializationRow(t0, h, None, None, None, "cap")
    ratio = val.total / h if h > 0 else None
    return SpecializationRow(t0, h, val.total, val.error_radius, ratio, "ok")


def specialization_experiment(phi: HenonMap, P: PlanePoint, samples: Iterable,
                              config: HeightConfig = DEFAULT_CONFIG) -> list[SpecializationRow]:
    """Rows (t0, h(t0), hhat of the specialised point, hhat / h(t0)) in sample order."""
    return [specialization_row(phi, P, t0, config) for t0 in samples]


def rows_to_csv(rows: Sequence[SpecializationRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t0", "h_t0", "hhat", "ratio", "status"])
    for r in rows:
        w.writerow([str(r.t0), _fmt(r.h_t0), _fmt(r.hhat), _fmt(r.ratio), r.status])
    return buf.getvalue()


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))
