"""Batch command-line front end.

Every subcommand is a thin file-level wrapper over the library with
deterministic output bytes: recordings and rows are emitted in sorted
order regardless of the ``--jobs`` parallelism degree.

Exit codes: 0 success, 2 usage, 3 parse/input error, 4 recording-pairing
error, 5 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from decimal import Decimal, InvalidOperation
from typing import Sequence

from .errors import FormatError, PairingError
from .formats import (
    emit_rttm,
    group_windows,
    parse_alignment,
    parse_rttm,
    parse_uem,
    parse_window_activity,
)
from .metrics import (
    DERReport,
    check_paired,
    closing_sweep_corpus,
    collar_sweep_corpus,
    corpus_report_csv,
    corpus_report_json,
    der,
    der_corpus,
)
from .resegment import ResegmentParams, fit_delta, resegment_tokens
from .streaming import (
    DEFAULT_GEOMETRY,
    WindowGeometry,
    aggregate_offline,
    aggregate_streaming,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_PAIRING = 4
EXIT_INTERNAL = 5

JOBS_ENV = "DIARSEG_JOBS"


class GridSpec:
    """Inclusive decimal grid ``A:B:STEP``; keeps the step's precision
    for formatting grid values back out."""

    def __init__(self, spec: str):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError("grid must be A:B:STEP")
        try:
            start, stop, step = (Decimal(p) for p in parts)
        except InvalidOperation:
            raise ValueError(f"non-numeric grid component in {spec!r}") from None
        if step <= 0 or stop < start or start < 0:
            raise ValueError("grid requires 0 <= A <= B and STEP > 0")
        values = []
        v = start
        while v <= stop:
            values.append(float(v))
            v += step
        self.values = tuple(values)
        exponent = step.normalize().as_tuple().exponent
        self.decimals = max(0, -int(exponent))

    def format(self, value: float) -> str:
        return f"{value:.{self.decimals}f}"


def _grid_type(spec: str) -> GridSpec:
    try:
        return GridSpec(spec)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _geometry_type(spec: str) -> streaming.WindowGeometry:
    parts = spec.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("geometry must be WIDTH:SHIFT:TAIL")
    try:
        width, shift, tail = (float(p) for p in parts)
        return WindowGeometry(width=width, shift=shift, emit_tail=tail)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _nonneg_type(value: str) -> float:
    try:
        parsed = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}") from None
    if parsed < 0:
        raise argparse.ArgumentTypeError("value must be non-negative")
    return parsed


def _pos_type(value: str) -> float:
    parsed = _nonneg_type(value)
    if parsed == 0:
        raise argparse.ArgumentTypeError("value must be positive")
    return parsed


def _default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)


def _load_uem(path: str | None):
    return parse_uem(_read(path)) if path else None


def _curve_csv(param: str, curve, fmt) -> str:
    lines = [f"{param},der,missed_s,fa_s,cf_s"]
    for value, report in curve:
        lines.append(
            f"{fmt(value)},{report.der:.6f},{report.missed:.6f},"
            f"{report.false_alarm:.6f},{report.confusion:.6f}"
        )
    return "".join(line + "\n" for line in lines)


def _cmd_der(args: argparse.Namespace) -> int:
    refs = parse_rttm(_read(args.ref)).annotations
    hyps = parse_rttm(_read(args.hyp)).annotations
    report = der_corpus(
        refs, hyps, args.collar, _load_uem(args.uem), jobs=args.jobs
    )
    if args.json:
        _write(corpus_report_json(report), args.out)
    else:
        _write(corpus_report_csv(report), args.out)
    return EXIT_OK


def _cmd_resegment(args: argparse.Namespace) -> int:
    tokens = parse_alignment(_read(args.alignment))
    outcome = resegment_tokens(
        tokens, ResegmentParams(min_pause=args.min_pause)
    )
    _write(emit_rttm(outcome.annotations), args.out)
    for rec, count in sorted(outcome.cross_segment_merges.items()):
        if count:
            print(f"note: {rec}: {count} cross-segment merges", file=sys.stderr)
    return EXIT_OK


def _cmd_close(args: argparse.Namespace) -> int:
    annotations = parse_rttm(_read(args.rttm)).annotations
    closed = {rec: ann.close(args.width) for rec, ann in annotations.items()}
    _write(emit_rttm(closed), args.out)
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    refs = parse_rttm(_read(args.ref)).annotations
    hyps = parse_rttm(_read(args.hyp)).annotations
    uems = _load_uem(args.uem)
    grid: GridSpec = args.grid
    if args.mode == "collar":
        table = collar_sweep_corpus(refs, hyps, grid.values, uems, jobs=args.jobs)
        param = "collar_s"
    else:
        table = closing_sweep_corpus(
            refs, hyps, grid.values, uems, collar=args.collar, jobs=args.jobs
        )
        param = "width_s"
    _write(_curve_csv(param, table.items(), grid.format), args.out)
    return EXIT_OK


def _cmd_fit_delta(args: argparse.Namespace) -> int:
    anchors = parse_rttm(_read(args.anchor)).annotations
    tights = parse_rttm(_read(args.tight)).annotations
    grid: GridSpec = args.grid
    fit = fit_delta(
        anchors, tights, grid.values, args.collar, _load_uem(args.uem), jobs=args.jobs
    )
    _write(_curve_csv("width_s", fit.curve, grid.format), args.out)
    # The fitted width goes to stdout even when the curve goes to a file.
    sys.stdout.write(f"delta_s={grid.format(fit.delta)} der={fit.der_at_delta:.6f}\n")
    return EXIT_OK


def _cmd_stream_sim(args: argparse.Namespace) -> int:
    windows = parse_window_activity(_read(args.windows))
    grouped = group_windows(windows)
    refs = parse_rttm(_read(args.ref)).annotations if args.ref else None
    if refs is None and not (args.out_offline or args.out_streaming):
        print(
            "diarseg stream-sim: nothing to do: pass --ref for a comparison CSV "
            "and/or --out-offline/--out-streaming for aggregated labels",
            file=sys.stderr,
        )
        return EXIT_USAGE
    first_full = not args.tail_only

    def one(rec: str):
        ws = grouped[rec]
        offline = aggregate_offline(ws, args.geometry, args.threshold)
        online = aggregate_streaming(
            ws, args.geometry, args.threshold, first_window_full=first_full
        )
        return offline, online

    recordings = sorted(grouped)
    if args.jobs > 1 and len(recordings) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = dict(zip(recordings, pool.map(one, recordings)))
    else:
        results = {rec: one(rec) for rec in recordings}

    if args.out_offline:
        _write(emit_rttm({rec: pair[0] for rec, pair in results.items()}), args.out_offline)
    if args.out_streaming:
        _write(emit_rttm({rec: pair[1] for rec, pair in results.items()}), args.out_streaming)

    if refs is not None:
        check_paired(refs, results)
        uems = _load_uem(args.uem)
        lines = [
            "recording,offline_missed_s,offline_fa_s,offline_cf_s,offline_der,"
            "streaming_missed_s,streaming_fa_s,streaming_cf_s,streaming_der,der_delta"
        ]
        pooled_off = DERReport()
        pooled_str = DERReport()
        for rec in recordings:
            uem = uems.get(rec) if uems else None
            off = der(refs[rec], results[rec][0], args.collar, uem)
            str_ = der(refs[rec], results[rec][1], args.collar, uem)
            pooled_off = pooled_off + off
            pooled_str = pooled_str + str_
            lines.append(_comparison_row(rec, off, str_))
        lines.append(_comparison_row("AGGREGATE", pooled_off, pooled_str))
        _write("".join(line + "\n" for line in lines), args.out)
    return EXIT_OK


def _comparison_row(name: str, off: DERReport, str_: DERReport) -> str:
    return (
        f"{name},{off.missed:.6f},{off.false_alarm:.6f},{off.confusion:.6f},"
        f"{off.der:.6f},{str_.missed:.6f},{str_.false_alarm:.6f},"
        f"{str_.confusion:.6f},{str_.der:.6f},{str_.der - off.der:.6f}"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diarseg",
        description="Speaker-diarization segment-label toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, uem: bool = True) -> None:
        p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
        p.add_argument(
            "--jobs",
            type=int,
            default=_default_jobs(),
            metavar="N",
            help=f"parallel workers (default: ${JOBS_ENV} or 1)",
        )
        if uem:
            p.add_argument("--uem", metavar="PATH", help="scoring regions (UEM file)")

    p_der = sub.add_parser("der", help="score hypothesis labels against a reference")
    p_der.add_argument("ref", help="reference RTTM")
    p_der.add_argument("hyp", help="hypothesis RTTM")
    p_der.add_argument("--collar", type=_nonneg_type, default=0.0, metavar="S")
    p_der.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    add_common(p_der)
    p_der.set_defaults(func=_cmd_der)

    p_rsg = sub.add_parser("resegment", help="tighten labels from a token alignment")
    p_rsg.add_argument("alignment", help="alignment TSV")
    p_rsg.add_argument("--min-pause", type=_pos_type, default=0.2, metavar="S")
    add_common(p_rsg, uem=False)
    p_rsg.set_defaults(func=_cmd_resegment)

    p_cls = sub.add_parser("close", help="fill pauses by morphological closing")
    p_cls.add_argument("rttm", help="input RTTM")
    p_cls.add_argument("--width", type=_nonneg_type, required=True, metavar="S")
    add_common(p_cls, uem=False)
    p_cls.set_defaults(func=_cmd_close)

    p_swp = sub.add_parser("sweep", help="DER as a function of collar or closing width")
    p_swp.add_argument("ref", help="reference RTTM")
    p_swp.add_argument("hyp", help="hypothesis RTTM")
    p_swp.add_argument("--mode", choices=("collar", "closing"), required=True)
    p_swp.add_argument("--grid", type=_grid_type, required=True, metavar="A:B:STEP")
    p_swp.add_argument(
        "--collar",
        type=_nonneg_type,
        default=0.0,
        metavar="S",
        help="fixed collar for closing mode",
    )
    add_common(p_swp)
    p_swp.set_defaults(func=_cmd_sweep)

    p_fit = sub.add_parser("fit-delta", help="fit the pause-filling width between two label sets")
    p_fit.add_argument("anchor", help="anchor RTTM (reference role)")
    p_fit.add_argument("tight", help="tight RTTM (gets closed)")
    p_fit.add_argument(
        "--grid", type=_grid_type, default=GridSpec("0:1:0.01"), metavar="A:B:STEP"
    )
    p_fit.add_argument("--collar", type=_nonneg_type, default=0.0, metavar="S")
    add_common(p_fit)
    p_fit.set_defaults(func=_cmd_fit_delta)

    p_sim = sub.add_parser("stream-sim", help="simulate offline vs streaming aggregation")
    p_sim.add_argument("windows", help="window-activity JSONL")
    p_sim.add_argument(
        "--geometry",
        type=_geometry_type,
        default=DEFAULT_GEOMETRY,
        metavar="W:S:T",
        help="window width : shift : emitted tail, seconds (default 10:1:1)",
    )
    p_sim.add_argument("--threshold", type=_nonneg_type, default=0.5, metavar="P")
    p_sim.add_argument("--ref", metavar="PATH", help="reference RTTM for scoring")
    p_sim.add_argument("--collar", type=_nonneg_type, default=0.0, metavar="S")
    p_sim.add_argument(
        "--tail-only",
        action="store_true",
        help="suppress full emission of the first window",
    )
    p_sim.add_argument("--out-offline", metavar="PATH", help="offline-aggregation RTTM")
    p_sim.add_argument("--out-streaming", metavar="PATH", help="streaming-aggregation RTTM")
    add_common(p_sim)
    p_sim.set_defaults(func=_cmd_stream_sim)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"diarseg {args.command}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"diarseg {args.command}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PairingError as exc:
        print(f"diarseg {args.command}: {exc}", file=sys.stderr)
        return EXIT_PAIRING
    except Exception as exc:  # pragma: no cover - defensive
        print(f"diarseg {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
