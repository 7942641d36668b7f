"""Benchmark the compiled kernels against the numpy fallback.

Times the three hot kernels on identical inputs for every available
backend, then times the end-to-end scoring path (one DER evaluation and
a 101-point closing-width fit on a 10-hour, 10k-segment recording) once
per backend by re-invoking itself with ``DIARSEG_BACKEND`` set.

Usage::

    python benchmarks/bench_backends.py
    python benchmarks/bench_backends.py --segments 50000 --repeats 5
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def build_recording(n_segments: int, n_speakers: int, hours: float, seed: int = 7):
    from diarseg import RecordingAnnotation

    rng = np.random.default_rng(seed)
    horizon_ms = int(hours * 3600 * 1000)
    per_spk = n_segments // n_speakers
    spans = {}
    for i in range(n_speakers):
        durs = rng.integers(300, 6_000, size=per_spk)
        budget = horizon_ms - int(durs.sum()) - 1_000
        gaps = rng.random(per_spk)
        gaps = np.maximum((gaps / gaps.sum() * budget).astype(np.int64), 50)
        cursor = int(rng.integers(0, 500))
        speaker_spans = []
        for dur, gap in zip(durs, gaps):
            cursor += int(gap)
            speaker_spans.append((cursor / 1000, (cursor + int(dur)) / 1000))
            cursor += int(dur)
        spans[f"spk{i}"] = speaker_spans
    return RecordingAnnotation.from_dict("bench", spans)


def jitter(annotation, seed: int = 8):
    from diarseg import RecordingAnnotation

    rng = np.random.default_rng(seed)
    spans = {}
    for spk, tl in annotation.timelines.items():
        out = []
        for s, e in tl.intervals:
            if rng.random() < 0.05:
                continue
            s_ms = max(0, round(s * 1000) + int(rng.integers(-300, 301)))
            e_ms = round(e * 1000) + int(rng.integers(-300, 301))
            if e_ms - s_ms >= 50:
                out.append((s_ms / 1000, e_ms / 1000))
        spans[spk] = out
    return RecordingAnnotation.from_dict("bench", spans)


def best_of(repeats: int, fn, *args):
    best = float("inf")
    for _ in range(repeats):
        started = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - started)
    return best, result


def bench_kernels(args) -> None:
    from diarseg._kernels import available_backends

    backends = available_backends()
    ref = build_recording(args.segments, args.speakers, args.hours)
    hyp = jitter(ref)

    merged_inputs = []
    for tl in ref.timelines.values():
        starts = np.repeat(tl.starts, 2) - 0.15
        ends = np.repeat(tl.ends, 2) + 0.15
        order = np.argsort(starts, kind="stable")
        merged_inputs.append((np.ascontiguousarray(starts[order]),
                              np.ascontiguousarray(ends[order])))

    region = next(iter(ref.timelines.values()))
    clip_pairs = [
        (tl.starts, tl.ends, region.starts, region.ends)
        for tl in hyp.timelines.values()
    ]

    def concat(annotation):
        starts, ends, ids = [], [], []
        for k, tl in enumerate(annotation.timelines.values()):
            starts.append(tl.starts)
            ends.append(tl.ends)
            ids.append(np.full(len(tl), k, np.int64))
        return np.concatenate(starts), np.concatenate(ends), np.concatenate(ids)

    rs, re_, rk = concat(ref)
    hs, he, hk = concat(hyp)
    mapping = np.arange(len(ref.timelines), dtype=np.int64)

    timings: dict[tuple[str, str], float] = {}
    for name, impl in sorted(backends.items()):
        timings[("merge", name)], _ = best_of(
            args.repeats,
            lambda: [impl.merge_sorted(s, e, 1e-9) for s, e in merged_inputs],
        )
        timings[("intersect", name)], _ = best_of(
            args.repeats,
            lambda: [impl.intersect(*pair) for pair in clip_pairs],
        )
        timings[("der_sweep", name)], _ = best_of(
            args.repeats,
            lambda: impl.der_sweep(
                rs, re_, rk, len(ref.timelines), hs, he, hk, len(hyp.timelines), mapping
            ),
        )

    print(f"kernels ({args.segments} segments, {args.speakers} speakers)")
    print(f"  {'kernel':<10} {'backend':<8} {'best_ms':>9} {'vs python':>10}")
    for kernel in ("merge", "intersect", "der_sweep"):
        for name in sorted(backends):
            value = timings[(kernel, name)]
            speedup = timings[(kernel, "python")] / value
            print(f"  {kernel:<10} {name:<8} {value * 1000:9.2f} {speedup:9.2f}x")


END_TO_END_SNIPPET = """
import json, time
import bench_backends as bb
import diarseg
from diarseg import der, fit_delta
from diarseg.resegment import DEFAULT_DELTA_GRID

ref = bb.build_recording({segments}, {speakers}, {hours})
hyp = bb.jitter(ref)
t0 = time.perf_counter()
report = der(ref, hyp, 0.25)
t_der = time.perf_counter() - t0
anchors = {{"bench": ref.close(0.3)}}
t0 = time.perf_counter()
fit = fit_delta(anchors, {{"bench": ref}}, DEFAULT_DELTA_GRID)
t_fit = time.perf_counter() - t0
print(json.dumps({{"backend": diarseg.KERNEL_BACKEND, "der_s": t_der,
                   "fit_s": t_fit, "der": report.der}}))
"""


def bench_end_to_end(args) -> None:
    from diarseg._kernels import available_backends

    snippet = END_TO_END_SNIPPET.format(
        segments=args.segments, speakers=args.speakers, hours=args.hours
    )
    print(f"\nend-to-end (DER + 101-point width fit, {args.segments} segments)")
    print(f"  {'backend':<8} {'der_ms':>9} {'fit_s':>7}")
    results = {}
    for name in sorted(available_backends()):
        env = dict(os.environ, DIARSEG_BACKEND=name, PYTHONPATH=os.pathsep.join(
            [os.path.dirname(os.path.abspath(__file__))] + sys.path[1:]
        ))
        out = subprocess.run(
            [sys.executable, "-c", snippet], env=env, capture_output=True, text=True
        )
        if out.returncode != 0:
            print(f"  {name:<8} failed:\n{out.stderr}", file=sys.stderr)
            continue
        payload = json.loads(out.stdout.strip().splitlines()[-1])
        assert payload["backend"] == name
        results[name] = payload
        print(f"  {name:<8} {payload['der_s'] * 1000:9.1f} {payload['fit_s']:7.2f}")
    if {"c", "python"} <= results.keys():
        der_speedup = results["python"]["der_s"] / results["c"]["der_s"]
        fit_speedup = results["python"]["fit_s"] / results["c"]["fit_s"]
        print(f"  compiled speedup: DER {der_speedup:.2f}x, fit {fit_speedup:.2f}x")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--segments", type=int, default=10_000)
    parser.add_argument("--speakers", type=int, default=8)
    parser.add_argument("--hours", type=float, default=10.0)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--skip-end-to-end", action="store_true")
    args = parser.parse_args()
    bench_kernels(args)
    if not args.skip_end_to_end:
        bench_end_to_end(args)


if __name__ == "__main__":
    main()
