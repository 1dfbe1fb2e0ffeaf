"""Scaling benchmark for fold_project at a fixed modulus."""

from __future__ import annotations

import csv
import io
import math
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .folding import build_fold_plan, fold_project
from .params import Params, _MEDIUM_PRIME
from .rng import stream

__all__ = ["ScalingRow", "bench_params", "run_bench", "loglog_slope", "rows_to_csv", "CSV_COLUMNS"]

CSV_COLUMNS = ("d", "q_bits", "mode", "trials", "mean_ms", "p95_ms",
               "phase_split_ms", "phase_solve_ms", "phase_recombine_ms")
# both factors are 1 mod 4096, so every d up to 2048 splits fully over q itself
BENCH_Q_FACTORS = ((65537, 1), (_MEDIUM_PRIME, 1))
BENCH_P = 65537


@dataclass(frozen=True)
class ScalingRow:
    d: int
    q_bits: int
    mode: str
    trials: int
    mean_ms: float
    p95_ms: float
    phase_split_ms: float
    phase_solve_ms: float
    phase_recombine_ms: float

    @property
    def key(self) -> tuple:
        return (self.d, self.q_bits, self.mode)

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


def bench_params(d: int, seed: int = 0) -> Params:
    q = math.prod(f for f, _ in BENCH_Q_FACTORS)
    return Params(N=2 * d, q=q, q_factors=BENCH_Q_FACTORS, p=BENCH_P, seed=seed, name=f"bench-d{d}")


def _measure(elem, plan, mode: str, batches: int, iterations: int, warmup: int):
    for _ in range(warmup):
        fold_project(elem, plan, mode)
    batch_means, samples = [], []
    phases = {"split": [], "solve": [], "recombine": []}
    for _ in range(batches):
        durations = []
        for _ in range(iterations):
            timings: dict = {}
            t0 = time.perf_counter()
            fold_project(elem, plan, mode, timings)
            durations.append((time.perf_counter() - t0) * 1e3)
            for k in phases:
                phases[k].append(timings.get(k, 0.0))
        batch_means.append(statistics.fmean(durations))
        samples.extend(durations)
    return (statistics.median(batch_means), float(np.percentile(samples, 95)),
            {k: statistics.median(v) for k, v in phases.items()})


def run_bench(dims=(8, 16, 32, 64, 128, 256, 512, 1024), modes=("coefficient", "evaluation"),
              batches: int = 5, iterations: int = 20, warmup: int = 5, seed: int = 0
              ) -> list[ScalingRow]:
    """Median-of-batches timings; warm-up calls are discarded."""
    rows = []
    for d in dims:
        params = bench_params(d, seed)
        plan = build_fold_plan(params, source="q-factors", mode="evaluation")
        elem = params.ring.random(stream(seed, "bench", d))
        for mode in modes:
            mean, p95, ph = _measure(elem, plan, mode, batches, iterations, warmup)
            rows.append(ScalingRow(d, params.q_bits, mode, batches * iterations, mean, p95,
                                   ph["split"], ph["solve"], ph["recombine"]))
    return rows


def loglog_slope(rows, mode: str, d_min: int = 64, d_max: int = 1024) -> float:
    """Least-squares slope of log(mean_ms) against log(d)."""
    pts = [(math.log(r.d), math.log(r.mean_ms)) for r in rows
           if r.mode == mode and d_min <= r.d <= d_max]
    if len(pts) < 2:
        raise ValueError("need at least two dimensions to fit a slope")
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([f"{v:.6f}" if isinstance(v, float) else v for v in r.as_tuple()])
    return buf.getvalue()
