"""Command-line interface: ``henon {height,verify,batch,family,orbit}``.

Exit codes: 0 success, 2 bad input, 3 iteration cap exceeded, 4 refuted,
5 I/O failure, 6 unsupported non-constant a.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .arith import parse_rational
from .core import HenonMap, OrbitStatus, PlanePoint, orbit
from .heights import CapExceeded, HeightConfig, canonical_height, escapes_somewhere
from .search import Outcome, batch_verify, find_rational_periodic_points, period_multiset, verify_conjecture_for, \
    write_report

log = logging.getLogger("henon")

EXIT_OK, EXIT_PARSE, EXIT_CAP, EXIT_REFUTED, EXIT_IO, EXIT_NONCONST_A = 0, 2, 3, 4, 5, 6

FORMATS = ("json", "csv", "text")


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    workers: int = 1
    output_format: str = "text"

    def __post_init__(self):
        if self.workers < 1:
            raise UsageError("workers must be >= 1")
        if self.output_format not in FORMATS:
            raise UsageError(f"unknown format {self.output_format!r}")


# --- parsing helpers ---------------------------------------------------------


def parse_point(text: str) -> PlanePoint:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"expected a point 'x,y', got {text!r}")
    return PlanePoint(parse_rational(parts[0]), parse_rational(parts[1]))


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise ValueError(f"expected a comma-separated list of integers, got {text!r}") from exc


def parse_rational_list(text: str) -> list[Fraction]:
    return [parse_rational(s) for s in text.split(",") if s.strip()]


def _map_from_args(args) -> HenonMap:
    a = parse_rational(args.a)
    if args.coeffs is not None:
        coeffs = parse_rational_list(args.coeffs)
        return HenonMap(a, tuple(coeffs))
    if args.b is None:
        raise ValueError("one of -b or --coeffs is required")
    return HenonMap.quadratic(parse_rational(args.b), a)


def _workers_default() -> int:
    env = os.environ.get("HENON_WORKERS")
    if env is None:
        return 1
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"HENON_WORKERS must be an integer, got {env!r}")


# --- output ------------------------------------------------------------------


def _csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in columns})
    return buf.getvalue()


def _emit(fmt: str, payload: dict, csv_rows=None, csv_columns=None, text: str | None = None) -> None:
    if fmt == "json":
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    elif fmt == "csv":
        sys.stdout.write(_csv(csv_rows if csv_rows is not None else [payload], csv_columns or list(payload)))
    else:
        sys.stdout.write((text if text is not None else json.dumps(payload, indent=2)) + "\n")


# --- commands ------------------------------------------------------------------


def cmd_height(args) -> int:
    phi = _map_from_args(args)
    P = parse_point(args.P)
    cfg = HeightConfig(arch_tolerance=args.tol, pre_escape_cap=args.cap)
    val = canonical_height(phi, P, cfg)
    payload = {"b": str(phi.b) if phi.d == 2 else None, "map": str(phi), "point": [str(P.x), str(P.y)],
               **val.to_dict()}
    lines = [f"map        {phi}", f"point      ({P.x}, {P.y})",
             f"h_plus     {val.h_plus:.12g}", f"h_minus    {val.h_minus:.12g}",
             f"total      {val.total:.12g}", f"radius     {val.error_radius:.3g}"]
    for lv in val.local_breakdown:
        desc = f"{lv.coeff} log {lv.place.p}" if lv.kind == "exact_log" else f"{lv.value:.12g}"
        flag = " (heuristic)" if lv.heuristic else ""
        lines.append(f"  {lv.direction.value}{lv.place!s:<8} {lv.kind:<9} {desc}{flag}")
    _emit(args.format, payload, [lv.to_dict() for lv in val.local_breakdown],
          ["place", "direction", "kind", "value", "lo", "hi", "coeff", "heuristic", "escape_step"], "\n".join(lines))
    return EXIT_OK


def cmd_verify(args) -> int:
    b = parse_rational(args.b)
    primes = parse_int_list(args.primes) if args.primes else None
    v = verify_conjecture_for(b, primes, force_search=args.force_search)
    payload = v.to_dict()
    if payload["periods"] is None and v.outcome is not Outcome.VACUOUS:
        # the filter alone does not list periods; report them from the search
        payload["periods"] = period_multiset(find_rational_periodic_points(b))
    periods = payload["periods"]
    text = f"b          {b}\nverdict    {v.outcome.value}"
    if v.primes:
        text += f"\nprimes     {','.join(map(str, v.primes))}\nfilter     {v.filter_set}"
    if periods is not None:
        text += f"\nperiods    {','.join(map(str, periods)) or '-'}"
    csv_row = {**payload, "primes": ",".join(map(str, v.primes)),
               "periods": ",".join(map(str, periods or [])),
               "filter_set": ",".join(map(str, payload["filter_set"] or []))}
    _emit(args.format, payload, [csv_row], ["b", "verdict", "primes", "filter_set", "periods"], text)
    return EXIT_REFUTED if v.outcome is Outcome.REFUTED else EXIT_OK


def cmd_batch(args) -> int:
    workers = args.workers if args.workers is not None else _workers_default()
    RunConfig("batch", workers, args.format)
    if args.resume and not args.checkpoint:
        raise UsageError("--resume needs --checkpoint")
    primes = parse_int_list(args.primes) if args.primes else None
    report = batch_verify(args.max_height, primes, args.checkpoint, resume=args.resume, workers=workers)
    if args.report:
        write_report(report, args.report)
    payload = report.to_dict()
    rows = [{"outcome": k, "count": n} for k, n in payload["counts"].items()]
    text = "\n".join([f"max height {args.max_height}", f"parameters {payload['total']}"]
                     + [f"  {r['outcome']:<28} {r['count']}" for r in rows]
                     + [f"refuted    {len(payload['refuted'])}"])
    _emit(args.format, payload, rows, ["outcome", "count"], text)
    return EXIT_REFUTED if payload["refuted"] else EXIT_OK


def cmd_family(args) -> int:
    from . import funcfield as ff

    a = ff.parse_ratfunc(args.a)
    if args.f is not None:
        coeffs = ff.parse_f_polynomial(args.f)
    elif args.b is not None:
        coeffs = [ff.parse_ratfunc(args.b), ff.RatFunc(0)]
    else:
        raise ValueError("one of -b or -f is required")
    phi = HenonMap(a, tuple(coeffs))
    payload: dict = {"map": str(phi)}
    text = [f"map        {phi}"]
    if args.isotriviality:
        iso = ff.is_isotrivial(phi)
        payload["isotrivial"] = iso
        text.append(f"isotrivial: {'true' if iso else 'false'}")
    rows = []
    if args.P is not None:
        P = ff.parse_ff_point(args.P)
        Dp, Dm = ff.height_divisors(phi, P, args.cap)
        payload.update({"point": [str(P.x), str(P.y)], "divisor_plus": Dp.to_list(), "divisor_minus": Dm.to_list(),
                        "generic_height": str(Dp.degree + Dm.degree)})
        text += [f"point      ({P.x}, {P.y})", f"D_plus     {Dp}", f"D_minus    {Dm}",
                 f"hhat       {Dp.degree + Dm.degree}"]
        if args.samples:
            rows = ff.specialization_experiment(phi, P, parse_rational_list(args.samples))
            payload["samples"] = [r.to_dict() for r in rows]
            text.append(ff.rows_to_csv(rows).rstrip("\n"))
    elif args.samples:
        raise ValueError("--samples needs -P")
    if args.format == "csv":
        if not rows:
            raise UsageError("csv output needs -P and --samples")
        sys.stdout.write(ff.rows_to_csv(rows))
    else:
        _emit(args.format, payload, text="\n".join(text))
    return EXIT_OK


def cmd_orbit(args) -> int:
    phi = _map_from_args(args)
    P = parse_point(args.P)
    rep = orbit(phi, P, args.cap, escape_test=escapes_somewhere(phi), backward=args.backward)
    payload = {"map": str(phi), "point": [str(P.x), str(P.y)], "status": rep.status.value, "step": rep.step,
               "period": rep.period}
    _emit(args.format, payload, [payload], ["status", "step", "period"], str(rep))
    return EXIT_CAP if rep.status is OrbitStatus.CAP_REACHED and args.strict else EXIT_OK


# --- parser --------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_PARSE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default="text")
    common.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")

    qmap = argparse.ArgumentParser(add_help=False)
    qmap.add_argument("-b", help="parameter b of (y, x + y^2 + b), as n/m")
    qmap.add_argument("-a", default="1", help="Jacobian parameter a (default 1)")
    qmap.add_argument("--coeffs", help="b_0,...,b_{d-1} of a monic f (instead of -b)")
    qmap.add_argument("-P", required=True, help="point as x,y")

    p = _Parser(prog="henon", description="Canonical heights and periodic points of Henon maps over Q and Q(t).")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    h = sub.add_parser("height", parents=[common, qmap], help="canonical height with local breakdown")
    h.add_argument("--tol", type=float, default=1e-9, help="archimedean interval width target")
    h.add_argument("--cap", type=int, default=64, help="pre-escape iteration cap")
    h.set_defaults(func=cmd_height)

    v = sub.add_parser("verify", parents=[common], help="period verdict for one parameter")
    v.add_argument("-b", required=True)
    v.add_argument("--primes", help="filter primes, e.g. 5,7,11 (default: first 8 good primes >= 5)")
    v.add_argument("--force-search", action="store_true")
    v.set_defaults(func=cmd_verify)

    bt = sub.add_parser("batch", parents=[common], help="verdicts for every b with H(b) <= T")
    bt.add_argument("--max-height", type=int, required=True)
    bt.add_argument("--workers", type=int, default=None, help="worker processes (default $HENON_WORKERS or 1)")
    bt.add_argument("--checkpoint", help="append-only record file")
    bt.add_argument("--resume", action="store_true")
    bt.add_argument("--primes")
    bt.add_argument("--report", help="write the JSON report here (atomically)")
    bt.set_defaults(func=cmd_batch)

    f = sub.add_parser("family", parents=[common], help="divisors and specialisation over Q(t)")
    f.add_argument("-b", help="b(t) for f = y^2 + b(t)")
    f.add_argument("-f", help="monic f in y over Q(t), e.g. y^2+2ty+t^2")
    f.add_argument("-a", default="1")
    f.add_argument("-P", help="point as x(t),y(t)")
    f.add_argument("--samples", help="t0 values, e.g. 10,100,1000")
    f.add_argument("--isotriviality", action="store_true")
    f.add_argument("--cap", type=int, default=12)
    f.set_defaults(func=cmd_family)

    o = sub.add_parser("orbit", parents=[common, qmap], help="classify an orbit")
    o.add_argument("--cap", type=int, default=1000)
    o.add_argument("--backward", action="store_true")
    o.add_argument("--strict", action="store_true", help="exit 3 when the cap is reached")
    o.set_defaults(func=cmd_orbit)
    return p


_FLAGS = {"--force-search", "--resume", "--isotriviality", "--backward", "--strict", "-v", "--verbose",
          "-h", "--help"}


def _attach_negative_values(argv: Sequence[str]) -> list[str]:
    """Glue values that start with '-' (e.g. ``-b -9/16``) to their option."""
    out: list[str] = []
    i = 0
    argv = list(argv)
    while i < len(argv):
        tok = argv[i]
        if (tok.startswith("-") and tok not in _FLAGS and "=" not in tok and i + 1 < len(argv)
                and argv[i + 1].startswith("-") and argv[i + 1][1:2].isdigit()):
            out.append(f"{tok}={argv[i + 1]}" if tok.startswith("--") else tok + argv[i + 1])
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        args = parser.parse_args(_attach_negative_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    from .funcfield import UnsupportedNonConstantA

    try:
        return args.func(args)
    except CapExceeded as exc:
        return _fail(EXIT_CAP, f"iteration cap exceeded: {exc}")
    except UnsupportedNonConstantA as exc:
        return _fail(EXIT_NONCONST_A, str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, f"I/O error: {exc}")
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        return _fail(EXIT_PARSE, str(exc))


def _fail(code: int, message: str) -> int:
    sys.stderr.write(f"henon: error: {message}\n")
    return code

if __name__ == "__main__":
    sys.exit(main())
