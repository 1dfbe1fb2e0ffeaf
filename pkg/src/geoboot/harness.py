"""Experiment configuration, golden record and the batch drivers behind the CLI."""

from __future__ import annotations

import json
import math
import re
import statistics
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from .bfv import encrypt, inject_noise, keygen
from .errors import NoSplitError, ParameterError
from .folding import FoldPlan, build_fold_plan, compare_to_oracle, geometric_bootstrap
from .ideals import GeneratorSet, calibrate, construct_fresh_generators, is_in_vanishing_set
from .params import Params, preset
from .ring import Ring, crt_reconstruct, crt_decompose, find_splitting_roots, round_to_multiple
from .ntt import CrtSplit
from .rng import stream

__all__ = [
    "ExperimentConfig",
    "demo_split_record",
    "load_golden",
    "check_golden",
    "run_calibration",
    "run_bootstrap_batch",
    "make_plan",
    "keys_for",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1
PARAM_KEYS = ("N", "q", "q_factors", "p", "sigma", "kappa")
MODES = ("coefficient", "evaluation", "consistency")
PLAN_SOURCES = ("auto", "q-factors", "auxiliary-primes")
_DELTA_RE = re.compile(r"^\s*([0-9]*\.?[0-9]+)\s*\*?\s*delta\s*$")


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description; every field has a JSON key of the same name."""

    preset: str | None = "tiny"
    N: int | None = None
    q: int | None = None
    q_factors: tuple | None = None
    p: int | None = None
    sigma: float | None = None
    kappa: int | None = None
    seed: int = 0
    trials: int = 100
    calibration_trials: int = 1000
    holdout_trials: int = 1000
    noise_targets: tuple = ()
    mode: str = "coefficient"
    plan_source: str = "auto"
    prime_budget: int | None = None
    split_level: int = 0
    bench_dims: tuple = (8, 16, 32, 64, 128, 256, 512, 1024)
    bench_modes: tuple = ("coefficient", "evaluation")
    bench_batches: int = 5
    bench_iterations: int = 20
    out: str | None = None

    def __post_init__(self):
        if self.trials < 1 or self.calibration_trials < 1 or self.holdout_trials < 1:
            raise ParameterError("trial counts must be >= 1")
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}")
        if self.plan_source not in PLAN_SOURCES:
            raise ParameterError(f"plan_source must be one of {PLAN_SOURCES}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be an explicit 64-bit unsigned integer")
        if self.bench_batches < 1 or self.bench_iterations < 1:
            raise ParameterError("bench batches and iterations must be >= 1")
        bad = [m for m in self.bench_modes if m not in ("coefficient", "evaluation")]
        if bad:
            raise ParameterError(f"unknown bench modes {bad}")
        params = self.params
        for t in self.resolved_noise_targets():
            if not 0 <= 2 * t < params.q:
                raise ParameterError(f"noise target {t} outside [0, q/2)")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ParameterError(f"unknown config keys: {', '.join(unknown)}")
        data = dict(data)
        for key in ("q_factors", "noise_targets", "bench_dims", "bench_modes"):
            if key in data and data[key] is not None:
                data[key] = tuple(tuple(x) if isinstance(x, list) else x for x in data[key])
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ParameterError("config must be a flat key/value object")
        return cls.from_dict(data)

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    @property
    def params(self) -> Params:
        overrides = {k: getattr(self, k) for k in PARAM_KEYS if getattr(self, k) is not None}
        overrides["seed"] = self.seed
        if self.preset is None:
            missing = [k for k in ("N", "q", "q_factors", "p") if k not in overrides]
            if missing:
                raise ParameterError(f"explicit params need {missing}")
            return Params(name="custom", **overrides)
        return preset(self.preset, **overrides)

    def resolved_noise_targets(self) -> tuple[int, ...]:
        params = self.params
        if not self.noise_targets:
            targets = [0, params.delta // 4]
            if 4 * params.delta < params.q:
                targets.append(2 * params.delta)
            return tuple(targets)
        out = []
        for t in self.noise_targets:
            if isinstance(t, str) and t.strip().isdigit():
                out.append(int(t))
            elif isinstance(t, str):
                match = _DELTA_RE.match(t)
                if not match:
                    raise ParameterError(f"noise target {t!r} is neither an integer nor '<k>delta'")
                out.append(math.floor(Fraction(match.group(1)) * params.delta))
            elif isinstance(t, int) and t >= 0:
                out.append(t)
            else:
                raise ParameterError(f"noise target {t!r} must be a nonnegative integer")
        return tuple(out)

    def to_dict(self) -> dict:
        return asdict(self)


def keys_for(params: Params):
    return keygen(params, stream(params.seed, "keygen"))


def make_plan(config: ExperimentConfig, params: Params) -> FoldPlan:
    fold_mode = "evaluation" if config.mode == "evaluation" else "coefficient"
    source = config.plan_source
    if source == "auto":
        try:
            return build_fold_plan(params, source="q-factors", split_level=config.split_level,
                                   mode=fold_mode)
        except NoSplitError:
            source = "auxiliary-primes"
    return build_fold_plan(params, prime_budget=config.prime_budget, source=source,
                           split_level=config.split_level, mode=fold_mode)


# ---------------------------------------------------------------- golden record

def demo_split_record() -> dict:
    """Recompute the x^8 + 1 mod 17 decomposition from scratch."""
    prime, N = 17, 16
    d = N // 2
    roots = list(find_splitting_roots(prime, N))
    split = CrtSplit((prime,), d)
    ring = Ring(d, prime, ((prime, 1),))
    sample = ring.element(np.arange(1, d + 1))
    parts = crt_decompose(sample, split)
    back = crt_reconstruct(parts, split, ring)
    slots = [int(v) for v in parts[0][:, 0]]
    tiny = preset("tiny")
    spacing = split.primes[0] if tiny.projection_gcd % prime == 0 else 1
    rounded = [int(v) for v in round_to_multiple(np.array(slots), spacing, prime)]
    return {
        "schema_version": SCHEMA_VERSION,
        "document": "demo_split",
        "N": N,
        "prime": prime,
        "roots": roots,
        "n_components": split.n_components,
        "component_dims": [split.component_dim] * split.n_components,
        "sample": sample.to_list(),
        "slots": slots,
        "identity": back == sample,
        "subproblems": [
            {"root": r, "target": s, "spacing": spacing, "solution": o}
            for r, s, o in zip(roots, slots, rounded)
        ],
    }


def load_golden(path: str | Path | None = None) -> dict:
    if path is None:
        text = resources.files("geoboot").joinpath("data/demo_split_golden.json").read_text()
    else:
        text = Path(path).read_text()
    return json.loads(text)


def check_golden(record: dict, golden: dict) -> list[str]:
    """Names of the fields where ``record`` deviates from ``golden``."""
    return sorted(k for k in set(record) | set(golden) if record.get(k) != golden.get(k))


# ---------------------------------------------------------------- calibration

def run_calibration(config: ExperimentConfig) -> GeneratorSet:
    """Fresh generator set calibrated on one stream and checked on a disjoint one."""
    params = config.params
    _, pk = keys_for(params)
    gens = construct_fresh_generators(params, pk)
    gens = calibrate(gens, pk, trials=config.calibration_trials, seed=config.seed)
    passed = 0
    for t in range(config.holdout_trials):
        rng = stream(config.seed, "holdout", t)
        m = rng.integers(0, params.p, size=params.d, dtype=np.int64)
        passed += is_in_vanishing_set(gens, encrypt(pk, m, rng)).passed
    record = dict(gens.calibration)
    record["holdout_trials"] = config.holdout_trials
    record["holdout_pass_rate"] = passed / config.holdout_trials
    return replace(gens, calibration=record)


# ---------------------------------------------------------------- bootstrap batch

def _summary(values) -> dict:
    values = sorted(values)
    if not values:
        return {"min": None, "median": None, "max": None}
    return {"min": values[0], "median": statistics.median_low(values), "max": values[-1]}


def _trial(config: ExperimentConfig, params: Params, keys, gens: GeneratorSet, plan: FoldPlan,
           target_idx: int, target: int, i: int) -> dict:
    sk, pk = keys
    rng = stream(config.seed, "bootstrap", target_idx, i)
    m = rng.integers(0, params.p, size=params.d, dtype=np.int64)
    ct = inject_noise(encrypt(pk, m, rng), target, rng)
    projection = "consistency" if config.mode == "consistency" else "component"
    _, report = geometric_bootstrap(ct, gens, plan, sk, m, projection=projection, pk=pk)
    comparison = compare_to_oracle(ct, sk, pk, gens, plan, rng, projection=projection)
    comparison.pop("reference_plaintext")
    return {
        "target_index": target_idx,
        "noise_target": target,
        "trial": i,
        "report": report.to_dict(),
        "comparison": comparison,
    }


def _aggregate(trials: list[dict], targets: tuple[int, ...]) -> list[dict]:
    rows = []
    for idx, target in enumerate(targets):
        sel = [t for t in trials if t["target_index"] == idx]
        n = len(sel)
        rep = [t["report"] for t in sel]
        cmp_ = [t["comparison"] for t in sel]
        rows.append({
            "noise_target": target,
            "trials": n,
            "geometric_preservation_rate": sum(c["geometric"]["plaintext_preserved"] for c in cmp_) / n,
            "oracle_preservation_rate": sum(c["oracle"]["plaintext_preserved"] for c in cmp_) / n,
            "geometric_true_plaintext_rate": sum(bool(r["plaintext_preserved"]) for r in rep) / n,
            "relation_pass_rate_before": sum(r["relation_report_before"]["passed"] for r in rep) / n,
            "relation_pass_rate_after": sum(r["relation_report_after"]["passed"] for r in rep) / n,
            "oracle_relation_pass_rate": sum(c["oracle"]["relations_pass"] for c in cmp_) / n,
            "noise_before": _summary(r["noise_before"] for r in rep),
            "noise_after_geometric": _summary(r["noise_after"] for r in rep),
            "noise_after_oracle": _summary(c["oracle"]["noise_after"] for c in cmp_),
        })
    return rows


def strip_timings(trial: dict) -> dict:
    out = json.loads(json.dumps(trial))
    out["report"].pop("timings_ms", None)
    for path in ("geometric", "oracle"):
        out["comparison"][path].pop("ms", None)
    out["comparison"].pop("time_ratio", None)
    return out


def run_bootstrap_batch(config: ExperimentConfig, gens: GeneratorSet, order=None) -> dict:
    """All trials for all noise targets; ``order`` permutes execution only."""
    params = config.params
    if gens.params != params:
        raise ParameterError("generator set was calibrated for different parameters")
    keys = keys_for(params)
    plan = make_plan(config, params)
    targets = config.resolved_noise_targets()
    jobs = [(ti, t, i) for ti, t in enumerate(targets) for i in range(config.trials)]
    if order is not None:
        jobs = [jobs[k] for k in order]
    results = [_trial(config, params, keys, gens, plan, ti, t, i) for ti, t, i in jobs]
    results.sort(key=lambda r: (r["target_index"], r["trial"]))
    timing = {
        "geometric_ms": _summary(r["comparison"]["geometric"]["ms"] for r in results),
        "oracle_ms": _summary(r["comparison"]["oracle"]["ms"] for r in results),
    }
    return {
        "schema_version": SCHEMA_VERSION,
        "document": "bootstrap_batch",
        "config": config.to_dict(),
        "params": params.to_dict(),
        "plan": plan.to_dict(),
        "aggregate": _aggregate(results, targets),
        "trials": results,
        "timing": timing,
    }
