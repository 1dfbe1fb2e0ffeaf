"""Toy BFV: keys, encryption, decryption, addition and noise bookkeeping.

Nothing here is constant time or secure at the preset sizes; the module
exists to produce ciphertexts with known, controllable noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import ParameterError
from .params import Params
from .ring import RingElement, centered, inf_norm, ring_mul

__all__ = [
    "DiscreteGaussian",
    "SecretKey",
    "PublicKey",
    "Ciphertext",
    "keygen",
    "encrypt",
    "decrypt",
    "hom_add",
    "inject_noise",
    "noise_of",
    "oracle_bootstrap",
    "fresh_noise_bound",
]

_WEIGHT_SCALE = 2**52


@dataclass(frozen=True)
class DiscreteGaussian:
    """Discrete Gaussian on ``[-ceil(6 sigma), ceil(6 sigma)]`` via an integer CDF.

    Each support point ``x`` gets the integer weight
    ``round(2**52 * exp(-x^2 / (2 sigma^2)))`` and sampling draws a uniform
    integer below the weight total, so ``Pr[x]`` is an exact rational and the
    distribution is exactly symmetric.
    """

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ParameterError("sigma must be positive")

    @property
    def tail_bound(self) -> int:
        return math.ceil(6 * self.sigma)

    @cached_property
    def support(self) -> np.ndarray:
        t = self.tail_bound
        return np.arange(-t, t + 1, dtype=np.int64)

    @cached_property
    def weights(self) -> tuple[int, ...]:
        half = [round(_WEIGHT_SCALE * math.exp(-(x * x) / (2 * self.sigma**2)))
                for x in range(self.tail_bound + 1)]
        if min(half) < 1:
            raise ParameterError("sigma too small for the integer CDF table")
        return tuple(half[:0:-1] + half)

    @cached_property
    def total(self) -> int:
        return sum(self.weights)

    @cached_property
    def _cdf(self) -> np.ndarray:
        return np.cumsum(np.array(self.weights, dtype=np.int64))

    def probability(self, x: int) -> Fraction:
        t = self.tail_bound
        if not -t <= x <= t:
            return Fraction(0)
        return Fraction(self.weights[x + t], self.total)

    def moment(self, i: int) -> Fraction:
        """Exact ``sum x^i Pr[x]`` over the support (the mean is exactly 0)."""
        if i < 1:
            raise ParameterError("moment order must be >= 1")
        t = self.tail_bound
        num = sum(x**i * w for x, w in zip(range(-t, t + 1), self.weights))
        return Fraction(num, self.total)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.integers(0, self.total, size=size, dtype=np.int64)
        return np.searchsorted(self._cdf, u, side="right").astype(np.int64) - self.tail_bound

    def sample_element(self, params: Params, rng: np.random.Generator) -> RingElement:
        return params.ring.element(self.sample(rng, params.d))


@dataclass(frozen=True, eq=False)
class SecretKey:
    s: RingElement
    params: Params


@dataclass(frozen=True, eq=False)
class PublicKey:
    a: RingElement
    b: RingElement
    params: Params

    def __eq__(self, other):
        if not isinstance(other, PublicKey):
            return NotImplemented
        return self.params == other.params and self.a == other.a and self.b == other.b

    def __hash__(self):
        return hash((self.a, self.b))


@dataclass(frozen=True, eq=False)
class Ciphertext:
    c0: RingElement
    c1: RingElement
    params: Params

    def __eq__(self, other):
        if not isinstance(other, Ciphertext):
            return NotImplemented
        return self.params == other.params and self.c0 == other.c0 and self.c1 == other.c1

    def __hash__(self):
        return hash((self.c0, self.c1))

    def to_dict(self) -> dict:
        return {"c0": self.c0.to_list(), "c1": self.c1.to_list()}

    @classmethod
    def from_dict(cls, data: dict, params: Params) -> "Ciphertext":
        ring = params.ring
        return cls(ring.element(data["c0"]), ring.element(data["c1"]), params)


def fresh_noise_bound(params: Params) -> int:
    """Worst-case fresh noise ``B(1 + 2 d B)`` with B the sampler tail bound.

    Fresh noise is ``e*u + e1 + e2*s`` with every factor bounded by B.
    """
    b = DiscreteGaussian(params.sigma).tail_bound
    return b * (1 + 2 * params.d * b)


def keygen(params: Params, rng: np.random.Generator) -> tuple[SecretKey, PublicKey]:
    chi = DiscreteGaussian(params.sigma)
    s = chi.sample_element(params, rng)
    a = params.ring.random(rng)
    e = chi.sample_element(params, rng)
    b = e - ring_mul(a, s)
    return SecretKey(s, params), PublicKey(a, b, params)


def _plaintext(m, params: Params) -> np.ndarray:
    if isinstance(m, RingElement):
        if m.modulus != params.p:
            raise ParameterError(f"plaintext lives mod {m.modulus}, expected mod p={params.p}")
        coeffs = np.asarray(m.coeffs, dtype=np.int64)
    else:
        coeffs = np.asarray(m, dtype=np.int64)
        if coeffs.ndim == 0:
            coeffs = np.concatenate([[int(coeffs)], np.zeros(params.d - 1, dtype=np.int64)])
    if coeffs.shape != (params.d,):
        raise ParameterError(f"plaintext must have {params.d} coefficients")
    if coeffs.min() < 0 or coeffs.max() >= params.p:
        raise ParameterError(f"plaintext coefficients must lie in [0, {params.p})")
    return coeffs


def encode(m, params: Params) -> RingElement:
    """The scaled message ``Delta * m`` in R_q."""
    return params.ring.element(_plaintext(m, params)).scale(params.delta)


def encrypt(pk: PublicKey, m, rng: np.random.Generator | None, *,
            noiseless: bool = False) -> Ciphertext:
    """``(Delta*m + b*u + e1, a*u + e2)`` with u, e1, e2 drawn from chi.

    ``noiseless=True`` sets u = e1 = e2 = 0 (no randomness is consumed).
    """
    params = pk.params
    scaled = encode(m, params)
    if noiseless:
        zero = params.ring.zero()
        return Ciphertext(scaled, zero, params)
    if rng is None:
        raise ParameterError("encrypt needs an rng unless noiseless=True")
    chi = DiscreteGaussian(params.sigma)
    u = chi.sample_element(params, rng)
    e1 = chi.sample_element(params, rng)
    e2 = chi.sample_element(params, rng)
    c0 = scaled + ring_mul(pk.b, u) + e1
    c1 = ring_mul(pk.a, u) + e2
    return Ciphertext(c0, c1, params)


def raw_decrypt(sk: SecretKey, ct: Ciphertext) -> RingElement:
    """``c0 + c1*s`` = Delta*m + noise."""
    _same_params(sk.params, ct.params)
    return ct.c0 + ring_mul(ct.c1, sk.s)


def decrypt(sk: SecretKey, ct: Ciphertext) -> RingElement:
    params = ct.params
    q, p = params.q, params.p
    x = centered(raw_decrypt(sk, ct).coeffs, q)
    # nearest integer to x*p/q, halves rounded up
    if q * p < 2**62:
        m = (2 * x * p + q) // (2 * q)
    elif q % p == 0:
        delta = params.delta
        m = (2 * x + delta) // (2 * delta)
    else:
        xo = x.astype(object)
        m = ((2 * xo * p + q) // (2 * q)).astype(np.int64)
    return params.plaintext_ring.element(m % p)


def _same_params(x: Params, y: Params) -> None:
    if x != y:
        raise ParameterError("operands were produced under different parameters")


def hom_add(x: Ciphertext, y: Ciphertext) -> Ciphertext:
    _same_params(x.params, y.params)
    return Ciphertext(x.c0 + y.c0, x.c1 + y.c1, x.params)


def inject_noise(ct: Ciphertext, target_norm: int, rng: np.random.Generator) -> Ciphertext:
    """Add a polynomial with coefficients uniform in ``[-t, t]`` to c0."""
    params = ct.params
    if not 0 <= 2 * target_norm < params.q:
        raise ParameterError(f"target_norm {target_norm} must lie in [0, q/2)")
    if target_norm == 0:
        return ct
    r = rng.integers(-target_norm, target_norm + 1, size=params.d, dtype=np.int64)
    return Ciphertext(ct.c0 + params.ring.element(r), ct.c1, params)


def noise_of(sk: SecretKey, ct: Ciphertext, m) -> int:
    """Secret-key oracle: ``||c0 + c1*s - Delta*m||_inf`` on the centered lift."""
    return inf_norm(raw_decrypt(sk, ct) - encode(m, ct.params))


def oracle_bootstrap(sk: SecretKey, pk: PublicKey, ct: Ciphertext,
                     rng: np.random.Generator) -> Ciphertext:
    """Reference refresh: decrypt, then encrypt the result again."""
    return encrypt(pk, decrypt(sk, ct), rng)
