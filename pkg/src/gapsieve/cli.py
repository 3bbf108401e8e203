"""Command-line front end.

Subcommands: primes, tuple, singular-series, gallagher, weights, moment,
threshold, bv, trend, replay.  Human-readable text goes to stdout by default;
--json switches to the canonical machine document (byte-stable across runs
and worker counts).  --manifest records the run; replay re-executes a
manifest and verifies the fingerprint.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import bv as bv_mod
from . import manifest as manifest_mod
from .errors import GapsieveError, RegimeError
from .moments import (
    SieveParams,
    gap_bound,
    two_primes_detector,
    pure_moment,
    threshold,
    twisted_moment,
)
from .parallel import resolve_workers
from .primes import primes_in
from .serialize import canonical_json, fmt_float
from .singular import gallagher_average, singular_series
from .tuples import OffsetTuple, enumerate_tuples, first_obstruction, is_admissible, normalize_offsets
from .weights import WeightParams, lambda_block

EXIT_OK = 0
EXIT_REGIME = 3
EXIT_ERROR = 4
EXIT_REPLAY_MISMATCH = 1


def _int_arg(text: str) -> int:
    """Integer flags accepting scientific notation like 1e7."""
    v = float(text)
    if v != int(v):
        raise argparse.ArgumentTypeError(f"{text} is not an integer")
    return int(v)


def _fraction_arg(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"{text} is not a rational") from exc


def _common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--workers", type=int, default=None, help="worker processes (env GAPSIEVE_WORKERS)")
    sub.add_argument("--json", action="store_true", help="emit the canonical JSON document")
    sub.add_argument("--out", type=str, default=None, help="write the primary artifact to this path")
    sub.add_argument("--manifest", type=str, default=None, help="write a run manifest to this path")
    sub.add_argument("--config", type=str, default=None, help="key=value defaults file; flags override")
    sub.add_argument("--force", action="store_true", help="run despite regime violations")
    sub.add_argument("--seed", type=int, default=0, help="phase offset for stride sampling (no other RNG)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gapsieve")
    subs = p.add_subparsers(dest="command", required=True)

    s = subs.add_parser("primes", help="emit primes in a range, one per line")
    s.add_argument("--from", dest="lo", type=_int_arg, required=True)
    s.add_argument("--to", dest="hi", type=_int_arg, required=True)
    _common(s)

    s = subs.add_parser("tuple", help="tuple utilities")
    s.add_argument("action", choices=["check"])
    s.add_argument("offsets", type=str, help="comma-separated offsets, e.g. 1,3")
    _common(s)

    s = subs.add_parser("singular-series", help="tuple density constant")
    s.add_argument("--tuple", dest="offsets", type=str, required=True)
    s.add_argument("--tol", type=float, default=1e-12)
    s.add_argument("--truncation-prime", type=_int_arg, default=None)
    _common(s)

    s = subs.add_parser("gallagher", help="normalized tuple-density average")
    s.add_argument("--span", type=_int_arg, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--stride", type=int, default=1)
    _common(s)

    s = subs.add_parser("weights", help="divisor-sum weights over a block")
    s.add_argument("--tuple", dest="offsets", type=str, required=True)
    s.add_argument("--R", type=float, required=True)
    s.add_argument("--a", type=int, required=True)
    s.add_argument("--from", dest="lo", type=_int_arg, required=True)
    s.add_argument("--to", dest="hi", type=_int_arg, required=True)
    _common(s)

    s = subs.add_parser("moment", help="moment sums and the detector")
    s.add_argument("--mode", choices=["pure", "twisted", "detector"], required=True)
    s.add_argument("--tuple", dest="offsets", type=str, action="append", default=None,
                   help="explicit tuple (repeatable for the detector)")
    s.add_argument("--tuple-source", choices=["explicit", "all", "admissible", "sample"],
                   default="explicit")
    s.add_argument("--stride", type=int, default=1, help="sampling stride for --tuple-source sample")
    s.add_argument("--k", type=int, default=None, help="tuple size for enumerated sources")
    s.add_argument("--N", type=_int_arg, required=True)
    s.add_argument("--R", type=float, default=None)
    s.add_argument("--R-exponent", dest="r_exponent", type=float, default=None)
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--span", type=_int_arg, default=None)
    s.add_argument("--theta", type=_fraction_arg, default=Fraction(1, 2))
    s.add_argument("--h", type=int, default=None, help="shift for twisted mode")
    s.add_argument("--h-mode", choices=["window", "tuple"], default="window")
    s.add_argument("--witness-cap", type=int, default=1000)
    _common(s)

    s = subs.add_parser("threshold", help="exact-rational threshold algebra")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--theta", type=str, required=True)
    s.add_argument("--eps", type=str, default="0")
    _common(s)

    s = subs.add_parser("bv", help="level-of-distribution deviation table")
    s.add_argument("--x", type=_int_arg, required=True)
    s.add_argument("--theta", type=_fraction_arg, required=True)
    s.add_argument("--A", type=float, default=1.0)
    s.add_argument("--y-min", type=_int_arg, default=100)
    s.add_argument("--grid-factor", type=int, default=2)
    _common(s)

    s = subs.add_parser("trend", help="direction of a metric across saved reports")
    s.add_argument("paths", nargs="+")
    _common(s)

    s = subs.add_parser("replay", help="re-run a manifest and verify its fingerprint")
    s.add_argument("--manifest-in", dest="manifest_in", type=str, required=True)
    _common(s)

    return p


def _read_config(path: str) -> list[str]:
    """key=value lines -> synthetic argv (real flags override by coming later)."""
    extra: list[str] = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line without '=': {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                extra.append(f"--{key}")
        else:
            extra.extend([f"--{key}", value])
    return extra


def _parse_tuple(text: str, span: int = 0) -> tuple[OffsetTuple, list[str]]:
    """Parse offsets, shifting patterns that start at 0 (or below) into [1, ...]."""
    values = [int(part) for part in text.split(",")]
    notes = []
    if min(values) < 1:
        shifted, shift = normalize_offsets(values)
        notes.append(f"tuple {text} shifted by +{shift} into [1, span]")
        values = list(shifted)
    return OffsetTuple(tuple(values), span), notes


def _emit(args, doc: dict, text_lines: list[str], csv_text: str | None = None) -> None:
    if args.json:
        payload = canonical_json(doc)
        if args.out:
            Path(args.out).write_text(payload + "\n", encoding="utf-8")
        else:
            print(payload)
    elif csv_text is not None and args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
    else:
        out = csv_text if csv_text is not None else "\n".join(text_lines) + "\n"
        sys.stdout.write(out)


def _finish(args, argv: list[str], doc: dict, wall_time: float, notes=None, sampling=None) -> None:
    if args.manifest:
        stored = _strip_io_flags(argv)
        m = manifest_mod.build_manifest(
            command=argv[0],
            argv=stored,
            result_doc=doc,
            notes=notes,
            sampling=sampling,
            wall_time=wall_time,
            workers=resolve_workers(args.workers),
        )
        manifest_mod.write_manifest(args.manifest, m)


def _strip_io_flags(argv: list[str]) -> list[str]:
    """Drop --manifest/--out (I/O routing, not computation) from stored argv."""
    out = []
    skip = False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok in ("--manifest", "--out"):
            skip = True
            continue
        out.append(tok)
    return out


# ---------------------------------------------------------------------------
# subcommand bodies: each returns (doc, text lines, csv or None, notes, sampling)
# ---------------------------------------------------------------------------

def _run_primes(args):
    ps = primes_in(args.lo, args.hi)
    doc = {"kind": "primes", "lo": args.lo, "hi": args.hi, "count": int(len(ps)),
           "primes": [int(p) for p in ps]}
    return doc, [str(int(p)) for p in ps], None, [], {}


def _run_tuple(args):
    t, notes = _parse_tuple(args.offsets)
    ok = is_admissible(t)
    obstruction = first_obstruction(t)
    doc = {"kind": "tuple_check", "offsets": list(t.offsets), "admissible": ok,
           "first_failing_prime": obstruction}
    line = f"{t}: " + ("admissible" if ok else f"inadmissible (first failing prime {obstruction})")
    return doc, [line], None, notes, {}


def _run_singular(args):
    t, notes = _parse_tuple(args.offsets)
    v = singular_series(t, tol=args.tol, truncation_prime=args.truncation_prime)
    doc = {"kind": "singular_series", "offsets": list(t.offsets), "value": v.value,
           "truncation_prime": v.truncation_prime, "tail_bound": v.tail_bound}
    lines = [f"tuple {t}", f"value            {fmt_float(v.value)}",
             f"truncation prime {v.truncation_prime}", f"tail bound       {fmt_float(v.tail_bound)}"]
    return doc, lines, None, notes, {}


def _run_gallagher(args):
    rep = gallagher_average(args.span, args.k, stride=args.stride,
                            phase=args.seed % args.stride if args.stride > 1 else 0,
                            workers=args.workers)
    doc = {"kind": "gallagher", "span_bound": rep.span_bound, "k": rep.k,
           "normalized": rep.normalized, "tuple_sum": rep.tuple_sum,
           "tuple_count": rep.tuple_count, "stride": rep.stride, "phase": rep.phase,
           "convention": rep.convention}
    lines = [f"span {rep.span_bound}  k {rep.k}  tuples {rep.tuple_count}",
             f"normalized average {fmt_float(rep.normalized)}  ({rep.convention})"]
    return doc, lines, None, [], {"stride": rep.stride, "phase": rep.phase}


def _run_weights(args):
    t, notes = _parse_tuple(args.offsets)
    blk = lambda_block(t, WeightParams(args.R, args.a), args.lo, args.hi, force=args.force)
    rows = [(int(n), float(v)) for n, v in zip(range(blk.lo, blk.hi), blk.values)]
    doc = {"kind": "weights", "offsets": list(t.offsets), "R": args.R, "a": args.a,
           "lo": blk.lo, "hi": blk.hi, "values": [v for _, v in rows]}
    csv_text = "n,value\n" + "\n".join(f"{n},{fmt_float(v)}" for n, v in rows) + "\n"
    return doc, [], csv_text, notes, {}


def _moment_params(args, k: int, span: int) -> SieveParams:
    if (args.R is None) == (args.r_exponent is None):
        raise GapsieveError("give exactly one of --R and --R-exponent")
    r = args.R if args.R is not None else float(args.N) ** args.r_exponent
    return SieveParams(N=args.N, R=r, k=k, l=args.l, span_bound=span, theta=args.theta)


def _run_moment(args):
    notes: list[str] = []
    sampling: dict = {"tuple_source": args.tuple_source}
    explicit: list[OffsetTuple] = []
    if args.offsets:
        for text in args.offsets:
            t, n = _parse_tuple(text)
            explicit.append(t)
            notes.extend(n)

    if args.mode == "pure":
        if len(explicit) != 1:
            raise GapsieveError("pure mode needs exactly one --tuple")
        t = explicit[0]
        params = _moment_params(args, t.k, args.span or t.span_bound)
        rep = pure_moment(t, params, workers=args.workers, force=args.force)
        doc = rep.doc()
        lines = _moment_text(doc)
        return doc, lines, None, notes, sampling

    if args.mode == "twisted":
        if len(explicit) != 1 or args.h is None:
            raise GapsieveError("twisted mode needs exactly one --tuple and --h")
        t = explicit[0]
        span = args.span or max(t.span_bound, args.h)
        params = _moment_params(args, t.k, span)
        rep = twisted_moment(t, args.h, params, workers=args.workers, force=args.force)
        doc = rep.doc()
        return doc, _moment_text(doc), None, notes, sampling

    # detector
    span = args.span or (explicit[0].span_bound if explicit else None)
    if span is None:
        raise GapsieveError("detector mode needs --span or an explicit --tuple")
    if args.tuple_source == "explicit":
        if not explicit:
            raise GapsieveError("explicit tuple source needs at least one --tuple")
        tuples = [OffsetTuple(t.offsets, span) for t in explicit]
        k = tuples[0].k
        params = _moment_params(args, k, span)
        source_iter = tuples
    else:
        if args.k is None:
            raise GapsieveError(f"tuple source {args.tuple_source!r} needs --k")
        k = args.k
        params = _moment_params(args, k, span)
        stride = args.stride if args.tuple_source == "sample" else 1
        phase = args.seed % stride if stride > 1 else 0
        sampling.update({"stride": stride, "phase": phase})
        source_iter = enumerate_tuples(
            span, k,
            admissible_only=args.tuple_source == "admissible",
            stride=stride, phase=phase,
        )
    rep = two_primes_detector(params, source_iter, h_mode=args.h_mode, workers=args.workers,
                       force=args.force, witness_cap=args.witness_cap)
    doc = rep.doc()
    lines = [
        f"detector ({rep.mode} mode, {rep.tuple_count} tuples)",
        f"empirical {fmt_float(rep.empirical)}",
        f"predicted {fmt_float(rep.predicted)}  bracket {fmt_float(rep.bracket)}",
        f"positive windows {rep.positive_count}",
    ]
    return doc, lines, None, notes, sampling


def _moment_text(doc: dict) -> list[str]:
    lines = [f"{doc['kind']} moment, tuple {{{','.join(map(str, doc['offsets']))}}}"]
    lines.append(f"empirical {fmt_float(doc['empirical'])}")
    lines.append(f"main term {fmt_float(doc['main_term'])}")
    ratio = doc["ratio"]
    lines.append("ratio     " + (fmt_float(ratio) if ratio is not None else "undefined (main term 0)"))
    return lines


def _run_threshold(args):
    rep = threshold(args.k, args.l, args.theta, args.eps)
    gb = gap_bound(args.theta)
    doc = rep.doc()
    doc["kind"] = "threshold"
    doc["gap_bound"] = str(gb)
    lines = [
        f"k {rep.k}  l {rep.l}  theta {rep.theta}  eps {rep.eps}",
        f"coefficient            {rep.coefficient}",
        f"theta term             {rep.theta_term}",
        f"log N coefficient      {rep.log_n_coefficient}",
        f"bracket coefficient    {rep.bracket_coefficient} (at R = N^(theta/2))",
        f"gap bound              {gb}",
    ]
    return doc, lines, None, [], {}


def _run_bv(args):
    grid = bv_mod.GridSpec(factor=args.grid_factor, y_min=args.y_min)
    table = bv_mod.bv_deviation(args.x, args.theta, grid=grid, workers=args.workers)
    doc = table.doc()
    doc["A"] = args.A
    bound = args.x / math.log(args.x) ** args.A
    doc["bound"] = bound
    csv_lines = ["q,a*,y*,deviation"]
    for r in table.rows:
        csv_lines.append(f"{r.q},{r.worst_a},{r.worst_y},{fmt_float(r.deviation)}")
    csv_lines.append(f"total,,,{fmt_float(table.total)}")
    csv_lines.append(f"bound x/(log x)^{args.A:g},,,{fmt_float(bound)}")
    sampling = {"y_grid": list(table.y_grid), "grid_factor": args.grid_factor, "y_min": args.y_min}
    return doc, [], "\n".join(csv_lines) + "\n", [], sampling


def _run_trend(args):
    docs = manifest_mod.load_docs(args.paths)
    doc = manifest_mod.emit_trend(docs)
    lines = [f"metric {doc['metric']} (target {doc['target']:g}): {doc['direction']}",
             "values " + " ".join(fmt_float(v) for v in doc["values"])]
    return doc, lines, None, [], {}


_RUNNERS = {
    "primes": _run_primes,
    "tuple": _run_tuple,
    "singular-series": _run_singular,
    "gallagher": _run_gallagher,
    "weights": _run_weights,
    "moment": _run_moment,
    "threshold": _run_threshold,
    "bv": _run_bv,
    "trend": _run_trend,
}


def run_argv(argv: list[str]) -> tuple[dict, object]:
    """Parse and execute; returns (result doc, parsed args).  Used by replay."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        extra = _read_config(args.config)
        argv2 = [argv[0]] + extra + argv[1:]
        args = parser.parse_args(argv2)
    doc, lines, csv_text, notes, sampling = _RUNNERS[args.command](args)
    return doc, (args, lines, csv_text, notes, sampling)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "replay":
            stored = manifest_mod.load_manifest(args.manifest_in)
            t0 = time.perf_counter()
            doc, (rargs, lines, csv_text, notes, sampling) = run_argv(list(stored["argv"]))
            actual = manifest_mod.build_manifest(
                stored["argv"][0], stored["argv"], doc, notes, sampling,
                wall_time=time.perf_counter() - t0, workers=resolve_workers(args.workers),
            )
            print(canonical_json(doc))
            if manifest_mod.manifest_spec(actual) != manifest_mod.manifest_spec(stored):
                print("replay mismatch: fingerprints differ", file=sys.stderr)
                return EXIT_REPLAY_MISMATCH
            return EXIT_OK

        t0 = time.perf_counter()
        doc, (args, lines, csv_text, notes, sampling) = run_argv(argv)
        wall = time.perf_counter() - t0
        _emit(args, doc, lines, csv_text)
        _finish(args, argv, doc, wall, notes, sampling)
        return EXIT_OK
    except RegimeError as exc:
        print(f"regime violation: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except GapsieveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
