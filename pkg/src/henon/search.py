"""Exhaustive search for Q-rational periodic points of (y, x + y^2 + b) and the
per-parameter verdict pipeline for the period conjecture N in {1,2,3,4,6,8}.

A rational periodic point exists only if den(b) = s^2 is a perfect square, and
then every coordinate is m/s with |m/s| <= 3 max(1, |b|)^(1/2).  The search
walks that grid with integer numerators; a candidate is dropped at the first
iterate that leaves it.
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .arith import as_fraction, enumerate_rationals, integer_sqrt_exact, mult_height
from .core import PlanePoint
from .modp import PeriodSet, default_filter_primes, intersect_filters

log = logging.getLogger(__name__)

ALLOWED_PERIODS = frozenset({1, 2, 3, 4, 6, 8})


class CapReached(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchBounds:
    s: int
    numerator_bound: int

    @property
    def grid_size(self) -> int:
        return (2 * self.numerator_bound + 1) ** 2


def _ceil_sqrt(n: int) -> int:
    r = math.isqrt(n)
    return r if r * r == n else r + 1


def search_bounds(b) -> SearchBounds | None:
    """Grid for the search, or None when den(b) is not a perfect square
    (no rational periodic points at all).

    numerator_bound = ceil(3 s max(1, |b|)^(1/2)) = ceil(sqrt(9 max(s^2, |num b|))).
    """
    b = as_fraction(b)
    s = integer_sqrt_exact(b.denominator)
    if s is None:
        return None
    return SearchBounds(s, _ceil_sqrt(9 * max(s * s, abs(b.numerator))))


def find_rational_periodic_points(b, cap: int | None = None) -> list[list[PlanePoint]]:
    """Every Q-rational cycle of (y, x + y^2 + b), each listed from its first grid point.

    Grid order: y-numerator outer, x-numerator inner, both ascending.  The cap
    defaults to the grid size, which bounds the length of any rational cycle.
    """
    b = as_fraction(b)
    bounds = search_bounds(b)
    if bounds is None:
        return []
    s, B = bounds.s, bounds.numerator_bound
    bn = b.numerator  # b = bn / s^2
    lim = 9 * max(s * s, abs(bn))  # archimedean confinement: numerator^2 <= lim
    if cap is None:
        cap = bounds.grid_size
    status: dict[tuple[int, int], bool] = {}
    cycles = []
    for n in range(-B, B + 1):
        if n * n > lim:
            continue
        for m in range(-B, B + 1):
            if m * m > lim or (m, n) in status:
                continue
            start = (m, n)
            path = [start]
            x, y = m, n
            for _ in range(cap):
                t = x * s + y * y + bn
                if t % s:
                    periodic = False
                    break
                x, y = y, t // s
                if y * y > lim:
                    periodic = False
                    break
                if x == m and y == n:
                    periodic = True
                    break
                known = status.get((x, y))
                if known is not None:
                    # a bijection cannot feed into a cycle from outside it
                    periodic = False
                    break
                path.append((x, y))
            else:
                raise CapReached(f"b={b}: orbit of ({m}/{s}, {n}/{s}) neither closed nor left the grid in {cap} steps")
            for pt in path:
                status[pt] = periodic
            if periodic:
                cycles.append([PlanePoint(Fraction(u, s), Fraction(w, s)) for u, w in path])
    return cycles


def period_multiset(cycles: Sequence[Sequence[PlanePoint]]) -> list[int]:
    return sorted(len(c) for c in cycles)


# --- verdicts ---------------------------------------------------------------


class Outcome(str, Enum):
    VERIFIED_BY_FILTER = "VerifiedByFilter"
    VERIFIED_BY_SEARCH = "VerifiedBySearch"
    VACUOUS = "VacuousNonSquareDenominator"
    REFUTED = "Refuted"

    @property
    def is_verified(self) -> bool:
        return self is not Outcome.REFUTED


@dataclass(frozen=True)
class Verdict:
    b: Fraction
    outcome: Outcome
    primes: tuple = ()
    filter_set: PeriodSet | None = None
    periods: tuple | None = None
    witness: tuple | None = None  # the offending cycle when refuted

    def detail(self) -> str:
        """Compact one-field description used in checkpoint records."""
        if self.outcome is Outcome.VACUOUS:
            return "-"
        if self.outcome is Outcome.VERIFIED_BY_FILTER:
            return "primes=" + ",".join(map(str, self.primes)) + ";S=" + ",".join(map(str, self.filter_set.sorted()))
        if self.outcome is Outcome.VERIFIED_BY_SEARCH:
            return "periods=" + ",".join(map(str, self.periods))
        return (f"periods={','.join(map(str, self.periods))};cycle="
                + "|".join(f"{P.x},{P.y}" for P in self.witness))

    def to_dict(self) -> dict:
        return {
            "b": str(self.b),
            "verdict": self.outcome.value,
            "primes": list(self.primes),
            "filter_set": None if self.filter_set is None else self.filter_set.sorted(),
            "periods": None if self.periods is None else list(self.periods),
            "witness": None if self.witness is None else [[str(P.x), str(P.y)] for P in self.witness],
        }


def verify_conjecture_for(b, filter_primes: Sequence[int] | None = None, force_search: bool = False) -> Verdict:
    """Filter first; fall back to the exhaustive grid search when the filter is inconclusive."""
    b = as_fraction(b)
    if search_bounds(b) is None:
        return Verdict(b, Outcome.VACUOUS)
    primes = tuple(default_filter_primes(b) if filter_primes is None else filter_primes)
    S = intersect_filters(b, primes)
    if not force_search and S.issubset(ALLOWED_PERIODS):
        return Verdict(b, Outcome.VERIFIED_BY_FILTER, primes, S)
    cycles = find_rational_periodic_points(b)
    periods = tuple(period_multiset(cycles))
    bad = [c for c in cycles if len(c) not in ALLOWED_PERIODS]
    if bad:
        return Verdict(b, Outcome.REFUTED, primes, S, periods, tuple(bad[0]))
    return Verdict(b, Outcome.VERIFIED_BY_SEARCH, primes, S, periods)


# --- batch driver -----------------------------------------------------------


@dataclass
class BatchReport:
    max_height: int
    counts: dict = field(default_factory=dict)
    refuted: list = field(default_factory=list)
    period_counts: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def to_dict(self) -> dict:
        return {
            "max_height": self.max_height,
            "total": self.total,
            "counts": {k: self.counts.get(k, 0) for k in sorted(o.value for o in Outcome)},
            "refuted": sorted(self.refuted, key=lambda r: _key(r[0])),
            "period_counts": {str(k): self.period_counts[k] for k in sorted(self.period_counts)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _key(text: str):
    q = Fraction(text)
    return (mult_height(q), q.denominator, q.numerator)


def format_record(v: Verdict) -> str:
    return f"{v.b.numerator}/{v.b.denominator}\t{v.outcome.value}\t{v.detail()}\n"


def parse_record(line: str) -> tuple[Fraction, str, str]:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 3:
        raise ValueError(f"malformed checkpoint record: {line!r}")
    b = Fraction(parts[0])
    Outcome(parts[1])
    return b, parts[1], parts[2]


def read_checkpoint(path: Path, repair: bool = False) -> dict[Fraction, tuple[str, str]]:
    """Records from a checkpoint file; a torn final line (no newline) is ignored,
    and removed from disk when ``repair`` is set."""
    path = Path(path)
    if not path.exists():
        return {}
    data = path.read_bytes()
    cut = data.rfind(b"\n") + 1
    if cut != len(data):
        log.warning("discarding torn checkpoint tail of %d bytes", len(data) - cut)
        if repair:
            with open(path, "r+b") as fh:
                fh.truncate(cut)
                fh.flush()
                os.fsync(fh.fileno())
    out = {}
    for line in data[:cut].decode().splitlines():
        if line:
            b, outcome, detail = parse_record(line)
            out[b] = (outcome, detail)
    return out


def _append_records(path: Path, lines: list[str]) -> None:
    # one write per chunk, then fsync: a crash leaves at most a torn last line
    payload = "".join(lines).encode()
    fd = os.open(path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
    try:
        os.write(fd, payload)
        os.fsync(fd)
    finally:
        os.close(fd)


def _verify_one(args) -> Verdict:
    b, primes = args
    return verify_conjecture_for(b, primes)


def _report_from_records(T: int, records: dict[Fraction, tuple[str, str]]) -> BatchReport:
    rep = BatchReport(T)
    for b in sorted(records, key=lambda q: (mult_height(q), q.denominator, q.numerator)):
        outcome, detail = records[b]
        rep.counts[outcome] = rep.counts.get(outcome, 0) + 1
        if outcome == Outcome.REFUTED.value:
            rep.refuted.append([f"{b.numerator}/{b.denominator}", detail])
        if detail.startswith("periods="):
            for N in detail.split(";")[0][len("periods="):].split(","):
                if N:
                    rep.period_counts[int(N)] = rep.period_counts.get(int(N), 0) + 1
    return rep


def batch_verify(T: int, filter_primes: Sequence[int] | None = None, checkpoint: str | Path | None = None,
                 resume: bool = False, workers: int = 1, chunk_size: int = 256,
                 progress=None) -> BatchReport:
    """Verdicts for every b with H(b) <= T.

    Records are appended to ``checkpoint`` one chunk at a time, in enumeration
    order.  With ``resume`` the parameters already recorded are skipped; the
    report is always rebuilt from the records, so it does not depend on how
    the run was split or scheduled.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    records: dict[Fraction, tuple[str, str]] = {}
    path = Path(checkpoint) if checkpoint is not None else None
    if path is not None:
        if resume:
            records = read_checkpoint(path, repair=True)
        elif path.exists():
            path.unlink()
    todo = [b for b in enumerate_rationals(T) if b not in records]
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for i in range(0, len(todo), chunk_size):
            chunk = todo[i:i + chunk_size]
            args = [(b, filter_primes) for b in chunk]
            if pool is None:
                verdicts = [_verify_one(a) for a in args]
            else:
                verdicts = list(pool.map(_verify_one, args, chunksize=max(1, len(args) // (4 * workers))))
            lines = [format_record(v) for v in verdicts]
            if path is not None:
                _append_records(path, lines)
            for v in verdicts:
                records[v.b] = (v.outcome.value, v.detail())
            if progress is not None:
                progress(len(records))
    finally:
        if pool is not None:
            pool.shutdown()
    return _report_from_records(T, records)


def write_report(report: BatchReport, path: str | Path) -> None:
    """Write the report atomically (temp file, fsync, rename)."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as fh:
        fh.write(report.to_json())
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
