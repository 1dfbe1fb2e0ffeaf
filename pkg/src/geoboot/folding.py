"""CRT folding of the projection CVP and the geometric bootstrap pipeline.

``fold_project`` maps a ring element to the closest point of the projection
lattice ``gcd(Delta, q) * Z^d`` (mod q).  In coefficient mode this is plain
per-coefficient rounding.  In evaluation mode the element is split over a set
of primes, each component is rounded in the image of that lattice, and the
pieces are recombined.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from math import gcd

import numpy as np

from .bfv import Ciphertext, PublicKey, SecretKey, decrypt, noise_of, oracle_bootstrap
from .errors import NoSplitError, ParameterError, SearchExhaustedError
from .ideals import GeneratorSet, is_in_vanishing_set, pk_digest
from .lattice import BRUTEFORCE_MAX_DIM, LatticeBasis, cvp_bruteforce
from .ntt import VECTOR_PRIME_LIMIT, CrtSplit, crt_combine, is_prime, ntt_table
from .params import Params
from .ring import RingElement, centered, ring_mul, round_to_multiple

__all__ = [
    "FoldPlan",
    "BootstrapReport",
    "build_fold_plan",
    "fold_project",
    "project_ciphertext",
    "geometric_bootstrap",
    "compare_to_oracle",
    "REPORT_SCHEMA_VERSION",
]

REPORT_SCHEMA_VERSION = 1
MODES = ("coefficient", "evaluation")
SOURCES = ("q-factors", "auxiliary-primes")
PROJECTIONS = ("component", "consistency")


@dataclass(frozen=True, eq=False)
class FoldPlan:
    params: Params
    split: CrtSplit
    component_dims: tuple[int, ...]
    mode: str = "evaluation"
    source: str = "auxiliary-primes"
    prime_budget: int | None = None
    max_component_dim: int = BRUTEFORCE_MAX_DIM

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}")
        if self.source not in SOURCES:
            raise ParameterError(f"source must be one of {SOURCES}")
        if sum(self.component_dims) != self.params.d:
            raise ParameterError("component dimensions must sum to d")
        if max(self.component_dims) > self.max_component_dim:
            raise ParameterError("component dimension exceeds max_component_dim")

    @property
    def primes(self) -> tuple[int, ...]:
        return self.split.primes

    @property
    def identity_projection(self) -> bool:
        """True when gcd(Delta, q) = 1 and every projection is the identity."""
        return self.params.projection_degenerate

    def component_spacing(self, prime: int) -> int:
        """Spacing of the image of the projection lattice modulo ``prime``."""
        return gcd(self.params.projection_gcd, prime)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "source": self.source,
            "primes": list(self.primes),
            "n_components": self.split.n_components,
            "component_dim": self.split.component_dim,
            "prime_budget": self.prime_budget,
            "max_component_dim": self.max_component_dim,
            "identity_projection": self.identity_projection,
        }


def _check_representable(params: Params, primes, source: str) -> None:
    # Slot-wise rounding only sees the lattice through residues; for auxiliary
    # primes those residues do not encode g * Z^d unless g = 1.
    if source == "auxiliary-primes" and params.projection_gcd != 1:
        raise ParameterError(
            f"auxiliary primes cannot represent the lattice {params.projection_gcd}*Z^d "
            "in evaluation mode; use source='q-factors'"
        )


def build_fold_plan(params: Params, max_component_dim: int = BRUTEFORCE_MAX_DIM,
                    prime_budget: int | None = None, *, source: str = "auxiliary-primes",
                    split_level: int = 0, mode: str = "evaluation",
                    search_limit: int | None = None) -> FoldPlan:
    """Choose the primes that split x^d + 1 for the folded solve.

    Auxiliary primes are found by an ascending scan from ``prime_budget``
    over primes = 1 mod (2d / 2^split_level) until their product covers q.
    ``split_level > 0`` groups 2^split_level conjugate roots per component.
    """
    d = params.d
    dt = 1 << split_level
    if split_level < 0 or dt > d:
        raise ParameterError("split_level must satisfy 1 <= 2^split_level <= d")
    if dt > max_component_dim:
        raise ParameterError(f"component dimension {dt} exceeds max_component_dim={max_component_dim}")
    step = 2 * d // dt
    if source == "q-factors":
        primes = []
        for f, e in params.q_factors:
            if e != 1 or (f - 1) % step or f >= VECTOR_PRIME_LIMIT:
                raise NoSplitError(f"factor {f}^{e} of q does not split x^{d}+1 into dimension-{dt} parts")
            primes.append(f)
        budget = None
    elif source == "auxiliary-primes":
        budget = 2 * d + 1 if prime_budget is None else prime_budget
        if budget < 2 * d + 1:
            raise ParameterError(f"prime budget {budget} below 2d+1 = {2 * d + 1}")
        limit = max(2 * budget, budget + 64 * 2 * d) if search_limit is None else search_limit
        primes, cover = [], 1
        n = budget + (-(budget - 1)) % step
        while cover < params.q:
            if n > limit or n >= VECTOR_PRIME_LIMIT:
                raise SearchExhaustedError(
                    f"no splitting primes covering q in [{budget}, {limit}]; raise the budget"
                )
            if is_prime(n):
                primes.append(n)
                cover *= n
            n += step
    else:
        raise ParameterError(f"source must be one of {SOURCES}")
    if mode == "evaluation":
        _check_representable(params, primes, source)
    split = CrtSplit(tuple(primes), d, dt)
    return FoldPlan(params, split, (dt,) * split.n_components, mode, source, budget,
                    max_component_dim)


def _tick(timings, key, start):
    now = time.perf_counter()
    if timings is not None:
        timings[key] = timings.get(key, 0.0) + (now - start) * 1e3
    return now


def _solve_components(comps: np.ndarray, prime: int, spacing: int) -> np.ndarray:
    if spacing == 1:
        return comps
    dt = comps.shape[-1]
    if dt == 1:
        return round_to_multiple(comps, spacing, prime)
    basis = LatticeBasis.diagonal(spacing, dt)
    out = np.empty_like(comps)
    for idx, target in enumerate(centered(comps, prime)):
        out[idx] = np.array(cvp_bruteforce(basis, [int(t) for t in target]).vector) % prime
    return out


def fold_project(elem: RingElement, plan: FoldPlan, mode: str | None = None,
                 timings: dict | None = None) -> RingElement:
    """Project onto the lattice; per-phase milliseconds accumulate in ``timings``."""
    params = plan.params
    if elem.modulus != params.q or elem.d != params.d:
        raise ParameterError("element and fold plan use different parameters")
    mode = plan.mode if mode is None else mode
    q, g = params.q, params.projection_gcd
    t = time.perf_counter()
    if mode == "coefficient":
        x = centered(elem.coeffs, q)
        t = _tick(timings, "split", t)
        y = round_to_multiple(x, g, q) if g > 1 else x % q
        t = _tick(timings, "solve", t)
        out = RingElement(np.ascontiguousarray(y, dtype=np.int64), elem.ring)
        _tick(timings, "recombine", t)
        return out
    if mode != "evaluation":
        raise ParameterError(f"mode must be one of {MODES}")
    _check_representable(params, plan.primes, plan.source)
    split = plan.split
    comps = split.forward(centered(elem.coeffs, q))
    t = _tick(timings, "split", t)
    solved = [_solve_components(c, p, plan.component_spacing(p)) for c, p in zip(comps, split.primes)]
    t = _tick(timings, "solve", t)
    coeffs = split.inverse(solved)
    M = split.modulus
    if M != q:
        coeffs = centered(coeffs, M) % q
    out = RingElement(np.ascontiguousarray(np.asarray(coeffs, dtype=np.int64)), elem.ring)
    _tick(timings, "recombine", t)
    return out


def _ring_inverse(b: RingElement) -> RingElement:
    primes = b.ring.ntt_primes
    if primes is None:
        raise ParameterError("inverting b needs q to be a product of NTT-friendly primes")
    residues = []
    for p in primes:
        table = ntt_table(p, b.d)
        slots = table.forward(b.coeffs % p)
        if np.any(slots == 0):
            raise ParameterError(f"b is not invertible modulo {p}")
        inv = np.array([pow(int(s), -1, p) for s in slots], dtype=np.int64)
        residues.append(table.inverse(inv))
    return RingElement(crt_combine(residues, primes), b.ring)


def project_ciphertext(ct: Ciphertext, plan: FoldPlan, *, mode: str | None = None,
                       projection: str = "component", pk: PublicKey | None = None,
                       timings: dict | None = None) -> Ciphertext:
    """The public transform: uses only the ciphertext, the plan and (optionally) pk."""
    if ct.params != plan.params:
        raise ParameterError("ciphertext and fold plan use different parameters")
    if projection == "component":
        return Ciphertext(fold_project(ct.c0, plan, mode, timings), ct.c1, ct.params)
    if projection == "consistency":
        if pk is None or pk.params != ct.params:
            raise ParameterError("consistency projection needs the matching public key")
        f = ring_mul(ct.c1, pk.a) + ring_mul(ct.c0, pk.b)
        f_proj = fold_project(f, plan, mode, timings)
        c0 = ct.c0 + ring_mul(f_proj - f, _ring_inverse(pk.b))
        return Ciphertext(c0, ct.c1, ct.params)
    raise ParameterError(f"projection must be one of {PROJECTIONS}")


@dataclass(frozen=True)
class BootstrapReport:
    params: dict
    mode: str
    projection: str
    plan: dict
    noise_before: int | None
    noise_after: int | None
    plaintext_preserved: bool | None
    relation_report_before: dict
    relation_report_after: dict
    identity_projection: bool
    timings: dict = field(default_factory=dict)

    def to_dict(self, *, include_timings: bool = True) -> dict:
        out = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "document": "bootstrap_report",
            "params": self.params,
            "mode": self.mode,
            "projection": self.projection,
            "plan": self.plan,
            "noise_before": self.noise_before,
            "noise_after": self.noise_after,
            "plaintext_preserved": self.plaintext_preserved,
            "relation_report_before": self.relation_report_before,
            "relation_report_after": self.relation_report_after,
            "identity_projection": self.identity_projection,
        }
        if include_timings:
            out["timings_ms"] = dict(self.timings)
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "BootstrapReport":
        if doc.get("schema_version") != REPORT_SCHEMA_VERSION or doc.get("document") != "bootstrap_report":
            raise ParameterError("not a bootstrap report of a supported version")
        return cls(
            doc["params"], doc["mode"], doc["projection"], doc["plan"], doc["noise_before"],
            doc["noise_after"], doc["plaintext_preserved"], doc["relation_report_before"],
            doc["relation_report_after"], doc["identity_projection"], doc.get("timings_ms", {}),
        )


def geometric_bootstrap(ct: Ciphertext, gens: GeneratorSet, plan: FoldPlan,
                        sk: SecretKey | None = None, true_m=None, *, mode: str | None = None,
                        projection: str = "component", pk: PublicKey | None = None
                        ) -> tuple[Ciphertext, BootstrapReport]:
    """Project ``ct`` and measure the outcome.

    The output ciphertext depends only on public data.  ``sk`` and ``true_m``
    are optional and only fill the measurement fields of the report.
    """
    if gens.params != ct.params or plan.params != ct.params:
        raise ParameterError("ciphertext, generator set and plan use different parameters")
    if pk is not None and pk_digest(pk) != gens.pk_digest:
        raise ParameterError("public key does not match the generator set")
    timings: dict = {}
    before = is_in_vanishing_set(gens, ct)
    start = time.perf_counter()
    out = project_ciphertext(ct, plan, mode=mode, projection=projection, pk=pk, timings=timings)
    timings["total"] = (time.perf_counter() - start) * 1e3
    after = is_in_vanishing_set(gens, out)
    noise_before = noise_after = preserved = None
    if sk is not None and true_m is not None:
        noise_before = noise_of(sk, ct, true_m)
        noise_after = noise_of(sk, out, true_m)
        m = ct.params.plaintext_ring.element(np.asarray(true_m, dtype=np.int64) % ct.params.p)
        preserved = decrypt(sk, out) == m
    report = BootstrapReport(
        params=ct.params.to_dict(),
        mode=plan.mode if mode is None else mode,
        projection=projection,
        plan=plan.to_dict(),
        noise_before=noise_before,
        noise_after=noise_after,
        plaintext_preserved=preserved,
        relation_report_before=before.to_dict(),
        relation_report_after=after.to_dict(),
        identity_projection=plan.identity_projection,
        timings=timings,
    )
    return out, report


def compare_to_oracle(ct: Ciphertext, sk: SecretKey, pk: PublicKey, gens: GeneratorSet,
                      plan: FoldPlan, rng: np.random.Generator, *, mode: str | None = None,
                      projection: str = "component") -> dict:
    """Run both refresh paths on ``ct``; fidelity is judged against decrypt(ct)."""
    reference = decrypt(sk, ct)
    t0 = time.perf_counter()
    geo = project_ciphertext(ct, plan, mode=mode, projection=projection, pk=pk)
    t1 = time.perf_counter()
    orc = oracle_bootstrap(sk, pk, ct, rng)
    t2 = time.perf_counter()
    geo_ms, orc_ms = (t1 - t0) * 1e3, (t2 - t1) * 1e3
    return {
        "reference_plaintext": reference.to_list(),
        "geometric": {
            "noise_after": noise_of(sk, geo, reference.coeffs),
            "plaintext_preserved": decrypt(sk, geo) == reference,
            "relations_pass": is_in_vanishing_set(gens, geo).passed,
            "ms": geo_ms,
        },
        "oracle": {
            "noise_after": noise_of(sk, orc, reference.coeffs),
            "plaintext_preserved": decrypt(sk, orc) == reference,
            "relations_pass": is_in_vanishing_set(gens, orc).passed,
            "ms": orc_ms,
        },
        "time_ratio": geo_ms / orc_ms if orc_ms > 0 else None,
    }
