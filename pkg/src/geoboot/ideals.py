"""Noise-ideal and fresh-ideal generator sets.

Relations are evaluated on a ciphertext and membership in the vanishing set
is decided against tolerances calibrated on fresh encryptions; exact-zero
rates are tracked alongside so the gap to exact vanishing stays visible.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Union

import numpy as np

from .bfv import Ciphertext, DiscreteGaussian, PublicKey, encrypt
from .errors import CalibrationRequiredError, DegeneratePlaintextError, ParameterError
from .params import Params, distinct_prime_factors
from .ring import (
    RingElement,
    apply_automorphism,
    centered,
    inf_norm,
    ring_mul,
    ring_pow,
    round_to_multiple,
    trace,
)
from .rng import stream

__all__ = [
    "Magnitude",
    "Structural",
    "Moment",
    "GeneratorSet",
    "MembershipReport",
    "nilpotency_index",
    "lift_reduce_psi",
    "round_delta",
    "automorphism_schedule",
    "central_moment",
    "construct_noise_generators",
    "construct_fresh_generators",
    "eval_relation",
    "evaluate_relations",
    "calibrate",
    "is_in_vanishing_set",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1
CALIBRATION_MARGIN = Fraction(11, 10)
MAX_MOMENTS = 4


@dataclass(frozen=True)
class Magnitude:
    p_i: int

    @property
    def label(self) -> str:
        return f"magnitude[p={self.p_i}]"


@dataclass(frozen=True, eq=False)
class Structural:
    j: int
    a_j: RingElement
    b_j: RingElement
    k: int

    @property
    def label(self) -> str:
        return f"structural[j={self.j}]"

    def __eq__(self, other):
        if not isinstance(other, Structural):
            return NotImplemented
        return (self.j, self.k, self.a_j, self.b_j) == (other.j, other.k, other.a_j, other.b_j)

    def __hash__(self):
        return hash((self.j, self.k, self.a_j, self.b_j))


@dataclass(frozen=True)
class Moment:
    i: int
    mu: Fraction

    @property
    def label(self) -> str:
        return f"moment[i={self.i}]"


Relation = Union[Magnitude, Structural, Moment]


def nilpotency_index(q_factors) -> int:
    """Smallest k with rad(Z_q)^k = 0: the largest prime-power exponent."""
    if not q_factors:
        raise ParameterError("empty factorization")
    return max(int(e) for _, e in q_factors)


def lift_reduce_psi(e: RingElement, p_i: int, params: Params | None = None) -> RingElement:
    """Round each centered coefficient to the nearest multiple of floor(q/p_i)."""
    if params is not None and params.p % p_i:
        raise ParameterError(f"{p_i} does not divide p={params.p}")
    q = e.modulus
    return RingElement(round_to_multiple(e.coeffs, q // p_i, q), e.ring)


def round_delta(e: RingElement, delta: int) -> RingElement:
    return RingElement(round_to_multiple(e.coeffs, delta, e.modulus), e.ring)


def automorphism_schedule(N: int, kappa: int) -> tuple[int, ...]:
    """Galois indices 3^t mod N for t = 1..kappa (all distinct)."""
    order, x = 1, 3 % N
    while x != 1:
        x = x * 3 % N
        order += 1
    if kappa > order:
        raise ParameterError(f"kappa={kappa} exceeds the order {order} of 3 mod {N}")
    return tuple(pow(3, t, N) for t in range(1, kappa + 1))


def central_moment(chi: DiscreteGaussian, i: int) -> Fraction:
    return chi.moment(i)


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    """Ordered relations plus (once calibrated) one tolerance per relation."""

    params: Params
    relations: tuple
    kind: str = "noise"
    tolerances: tuple | None = None
    calibration: dict | None = None
    pk_digest: str = ""

    @property
    def calibrated(self) -> bool:
        return self.tolerances is not None

    def __len__(self) -> int:
        return len(self.relations)

    def to_document(self) -> dict:
        rels = []
        for r in self.relations:
            if isinstance(r, Magnitude):
                rels.append({"kind": "magnitude", "p_i": r.p_i})
            elif isinstance(r, Structural):
                rels.append({"kind": "structural", "j": r.j, "k": r.k,
                             "a_j": r.a_j.to_list(), "b_j": r.b_j.to_list()})
            else:
                rels.append({"kind": "moment", "i": r.i, "mu": _frac_str(r.mu)})
        tol = None
        if self.tolerances is not None:
            tol = [_frac_str(t) if isinstance(t, Fraction) else int(t) for t in self.tolerances]
        return {
            "schema_version": SCHEMA_VERSION,
            "document": "generator_set",
            "kind": self.kind,
            "params": self.params.to_dict(),
            "pk_digest": self.pk_digest,
            "relations": rels,
            "tolerances": tol,
            "calibration": self.calibration,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_document(), sort_keys=True, indent=1)

    @classmethod
    def from_document(cls, doc: dict) -> "GeneratorSet":
        if doc.get("schema_version") != SCHEMA_VERSION or doc.get("document") != "generator_set":
            raise ParameterError("not a generator-set document of a supported version")
        params = Params.from_dict(doc["params"])
        ring = params.ring
        rels = []
        for r in doc["relations"]:
            if r["kind"] == "magnitude":
                rels.append(Magnitude(r["p_i"]))
            elif r["kind"] == "structural":
                rels.append(Structural(r["j"], ring.element(r["a_j"]), ring.element(r["b_j"]), r["k"]))
            elif r["kind"] == "moment":
                rels.append(Moment(r["i"], Fraction(r["mu"])))
            else:
                raise ParameterError(f"unknown relation kind {r['kind']!r}")
        tol = doc["tolerances"]
        if tol is not None:
            tol = tuple(Fraction(t) if isinstance(t, str) else int(t) for t in tol)
        return cls(params, tuple(rels), doc["kind"], tol, doc["calibration"], doc["pk_digest"])

    @classmethod
    def loads(cls, text: str) -> "GeneratorSet":
        return cls.from_document(json.loads(text))


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def pk_digest(pk: PublicKey) -> str:
    h = hashlib.sha256()
    h.update(pk.a.coeffs.tobytes())
    h.update(pk.b.coeffs.tobytes())
    return h.hexdigest()


def construct_noise_generators(params: Params, pk: PublicKey, kappa: int | None = None) -> GeneratorSet:
    """Magnitude relations per prime factor of p, then kappa structural ones."""
    if params.p == 1:
        raise DegeneratePlaintextError("plaintext modulus 1 has no prime factors")
    if pk.params != params:
        raise ParameterError("public key belongs to different parameters")
    kappa = params.kappa if kappa is None else kappa
    rels: list = [Magnitude(p_i) for p_i in distinct_prime_factors(params.p)]
    k = nilpotency_index(params.q_factors)
    for j in automorphism_schedule(params.N, kappa):
        rels.append(Structural(j, apply_automorphism(pk.a, j), apply_automorphism(pk.b, j), k))
    return GeneratorSet(params, tuple(rels), "noise", pk_digest=pk_digest(pk))


def construct_fresh_generators(params: Params, pk: PublicKey, chi: DiscreteGaussian | None = None,
                               kappa: int | None = None) -> GeneratorSet:
    """The noise set followed by min(kappa, 4) moment relations."""
    chi = chi or DiscreteGaussian(params.sigma)
    kappa = params.kappa if kappa is None else kappa
    noise = construct_noise_generators(params, pk, kappa)
    moments = [Moment(i, central_moment(chi, i)) for i in range(1, min(kappa, MAX_MOMENTS) + 1)]
    return replace(noise, relations=noise.relations + tuple(moments), kind="fresh")


def _structural_value(rel: Structural, ct: Ciphertext) -> RingElement:
    g = ring_mul(apply_automorphism(ct.c1, rel.j), rel.a_j) + ring_mul(
        apply_automorphism(ct.c0, rel.j), rel.b_j
    )
    err = g - round_delta(g, ct.params.delta)
    return ring_pow(err, rel.k)


def _isolated_noise(ct: Ciphertext) -> RingElement:
    return ct.c0 - round_delta(ct.c0, ct.params.delta)


def _moment_value(power: RingElement, mu: Fraction) -> Fraction:
    t = int(centered(np.array([trace(power)]), power.modulus)[0])
    return Fraction(t, power.d) - mu


def eval_relation(rel: Relation, ct: Ciphertext):
    """Value of one relation: a ring element, or an exact rational for moments."""
    params = ct.params
    if isinstance(rel, Magnitude):
        if params.p % rel.p_i:
            raise ParameterError(f"relation prime {rel.p_i} does not divide p={params.p}")
        c0 = ct.c0
        return (c0 - lift_reduce_psi(c0, rel.p_i)).scale(params.q // rel.p_i)
    if isinstance(rel, Structural):
        if rel.a_j.modulus != params.q or rel.a_j.d != params.d:
            raise ParameterError("structural relation built for different parameters")
        return _structural_value(rel, ct)
    if isinstance(rel, Moment):
        return _moment_value(ring_pow(_isolated_noise(ct), rel.i), rel.mu)
    raise TypeError(f"unknown relation {rel!r}")


def evaluate_relations(gens: GeneratorSet, ct: Ciphertext) -> list:
    """All relation values, sharing the powers of the isolated noise."""
    if ct.params != gens.params:
        raise ParameterError("ciphertext and generator set use different parameters")
    values = []
    powers: list[RingElement] = []
    for rel in gens.relations:
        if isinstance(rel, Moment):
            if not powers:
                powers.append(_isolated_noise(ct))
            while len(powers) < rel.i:
                powers.append(ring_mul(powers[-1], powers[0]))
            values.append(_moment_value(powers[rel.i - 1], rel.mu))
        else:
            values.append(eval_relation(rel, ct))
    return values


def _magnitude(value) -> Union[int, Fraction]:
    return inf_norm(value) if isinstance(value, RingElement) else abs(value)


@dataclass(frozen=True)
class MembershipReport:
    passed: bool
    labels: tuple[str, ...]
    magnitudes: tuple
    tolerances: tuple
    exact_zero: tuple[bool, ...]
    per_relation: tuple[bool, ...] = field(default=())

    def to_dict(self) -> dict:
        def enc(x):
            return _frac_str(x) if isinstance(x, Fraction) else int(x)

        return {
            "passed": self.passed,
            "relations": [
                {"label": lbl, "value": enc(m), "tolerance": enc(t), "pass": ok, "exact_zero": z}
                for lbl, m, t, ok, z in zip(self.labels, self.magnitudes, self.tolerances,
                                             self.per_relation, self.exact_zero)
            ],
        }


def is_in_vanishing_set(gens: GeneratorSet, ct: Ciphertext) -> MembershipReport:
    if not gens.calibrated:
        raise CalibrationRequiredError("generator set has no calibrated tolerances")
    mags = tuple(_magnitude(v) for v in evaluate_relations(gens, ct))
    oks = tuple(m <= t for m, t in zip(mags, gens.tolerances))
    return MembershipReport(
        passed=all(oks),
        labels=tuple(r.label for r in gens.relations),
        magnitudes=mags,
        tolerances=gens.tolerances,
        exact_zero=tuple(m == 0 for m in mags),
        per_relation=oks,
    )


def calibrate(gens: GeneratorSet, pk: PublicKey, trials: int = 1000, seed: int | None = None,
              stream_id: str = "calibration") -> GeneratorSet:
    """Set each tolerance to 1.1 x the largest value seen on fresh encryptions.

    Trial ``i`` draws its message and encryption randomness from the stream
    ``(seed, stream_id, i)``; the maxima are an order-independent reduction.
    """
    params = gens.params
    if pk_digest(pk) != gens.pk_digest:
        raise ParameterError("public key does not match the generator set")
    if trials < 1:
        raise ParameterError("calibration needs at least one trial")
    seed = params.seed if seed is None else seed
    n = len(gens.relations)
    maxima: list = [0] * n
    zeros = [0] * n
    for t in range(trials):
        rng = stream(seed, stream_id, t)
        m = rng.integers(0, params.p, size=params.d, dtype=np.int64)
        ct = encrypt(pk, m, rng)
        for idx, v in enumerate(evaluate_relations(gens, ct)):
            mag = _magnitude(v)
            maxima[idx] = max(maxima[idx], mag)
            zeros[idx] += mag == 0
    tolerances = []
    for rel, mx in zip(gens.relations, maxima):
        if isinstance(rel, Moment):
            tolerances.append(Fraction(mx) * CALIBRATION_MARGIN)
        else:
            tolerances.append(math.ceil(Fraction(mx) * CALIBRATION_MARGIN))
    record = {
        "trials": trials,
        "seed": seed,
        "stream": stream_id,
        "margin": _frac_str(CALIBRATION_MARGIN),
        "max_observed": [_frac_str(m) if isinstance(m, Fraction) else int(m) for m in maxima],
        "exact_zero_rate": [z / trials for z in zeros],
        "half_modulus": params.q // 2,
    }
    return replace(gens, tolerances=tuple(tolerances), calibration=record)
