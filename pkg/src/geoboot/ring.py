"""Exact arithmetic in Z_q[x]/(x^d + 1).

Coefficients are stored reduced into ``[0, q)`` as read-only int64 arrays;
the centered lift is a separate view.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import gcd

import numpy as np

from .errors import IntegrityError, NoSplitError, ParameterError
from .ntt import (
    VECTOR_PRIME_LIMIT,
    CrtSplit,
    crt_combine,
    find_splitting_roots,
    mulmod,
    ntt_table,
)
from .params import MAX_MODULUS

__all__ = [
    "Ring",
    "RingElement",
    "ring_mul",
    "ring_mul_schoolbook",
    "ring_pow",
    "ntt",
    "find_splitting_roots",
    "crt_decompose",
    "crt_reconstruct",
    "crt_round_trip",
    "apply_automorphism",
    "trace",
    "trace_explicit",
    "centered_lift",
    "centered",
    "round_to_multiple",
    "inf_norm",
]


def centered(values, q: int) -> np.ndarray:
    """Map residues to the representatives in ``[-floor(q/2), ceil(q/2))``."""
    v = np.asarray(values) % q
    return np.where(v >= (q + 1) // 2, v - q, v)


def round_to_multiple(values, step: int, q: int) -> np.ndarray:
    """Round centered residues to the nearest multiple of ``step``, reduce mod q.

    Ties go toward zero.  When ``step`` does not divide ``q`` the result is
    kept inside the centered window so that rounding is idempotent.
    """
    x = centered(values, q)
    r = x % step
    base = x - r
    up = (2 * r > step) | ((2 * r == step) & (x < 0))
    y = np.where(up, base + step, base)
    if q % step:
        y = np.where(y >= (q + 1) // 2, y - step, y)
        y = np.where(y < -(q // 2), y + step, y)
    return y % q


@dataclass(frozen=True)
class Ring:
    """The ring R_q for power-of-two cyclotomics (dimension ``d``)."""

    d: int
    q: int
    q_factors: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if self.d < 1 or self.d & (self.d - 1):
            raise ParameterError(f"ring dimension {self.d} must be a power of two")
        if not 1 < self.q < MAX_MODULUS:
            raise ParameterError(f"modulus {self.q} outside (1, 2**62)")

    @cached_property
    def ntt_primes(self) -> tuple[int, ...] | None:
        """Prime factors usable for the NTT product, or None for schoolbook."""
        if not self.q_factors:
            return None
        primes = []
        for f, e in self.q_factors:
            if e != 1 or (f - 1) % (2 * self.d) or f >= VECTOR_PRIME_LIMIT:
                return None
            primes.append(f)
        return tuple(primes)

    def element(self, coeffs) -> "RingElement":
        arr = np.asarray(coeffs)
        if arr.shape != (self.d,):
            raise ParameterError(f"expected {self.d} coefficients, got shape {arr.shape}")
        if arr.dtype == object or not np.issubdtype(arr.dtype, np.integer):
            arr = np.array([int(c) % self.q for c in arr], dtype=np.int64)
        else:
            arr = arr.astype(np.int64) % self.q
        return RingElement(arr, self)

    def zero(self) -> "RingElement":
        return RingElement(np.zeros(self.d, dtype=np.int64), self)

    def constant(self, c: int) -> "RingElement":
        arr = np.zeros(self.d, dtype=np.int64)
        arr[0] = c % self.q
        return RingElement(arr, self)

    def monomial(self, k: int, c: int = 1) -> "RingElement":
        """``c * x^k`` with the negacyclic wrap applied for ``k >= d``."""
        k %= 2 * self.d
        sign = 1
        if k >= self.d:
            k -= self.d
            sign = -1
        arr = np.zeros(self.d, dtype=np.int64)
        arr[k] = (sign * c) % self.q
        return RingElement(arr, self)

    def random(self, rng: np.random.Generator) -> "RingElement":
        return RingElement(rng.integers(0, self.q, size=self.d, dtype=np.int64), self)


class RingElement:
    """Immutable element of R_q."""

    __slots__ = ("coeffs", "ring")

    def __init__(self, coeffs: np.ndarray, ring: Ring):
        coeffs = np.asarray(coeffs, dtype=np.int64)
        if coeffs.shape != (ring.d,):
            raise ParameterError("coefficient vector has wrong length")
        if coeffs.size and (coeffs.min() < 0 or coeffs.max() >= ring.q):
            raise IntegrityError("coefficients must be reduced into [0, q)")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "ring", ring)

    def __setattr__(self, name, value):
        raise AttributeError("RingElement is immutable")

    @property
    def modulus(self) -> int:
        return self.ring.q

    @property
    def d(self) -> int:
        return self.ring.d

    def __repr__(self) -> str:
        body = ", ".join(str(int(c)) for c in self.coeffs[:8])
        more = ", ..." if self.d > 8 else ""
        return f"RingElement([{body}{more}], q={self.modulus})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, RingElement):
            return NotImplemented
        return self.ring.q == other.ring.q and bool(np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self) -> int:
        return hash((self.ring.q, self.coeffs.tobytes()))

    def _check(self, other: "RingElement") -> None:
        if not isinstance(other, RingElement):
            raise TypeError(f"expected RingElement, got {type(other).__name__}")
        if self.ring.d != other.ring.d or self.ring.q != other.ring.q:
            raise ParameterError(
                f"ring mismatch: (d={self.d}, q={self.modulus}) vs (d={other.d}, q={other.modulus})"
            )

    def __add__(self, other: "RingElement") -> "RingElement":
        self._check(other)
        return RingElement((self.coeffs + other.coeffs) % self.ring.q, self.ring)

    def __sub__(self, other: "RingElement") -> "RingElement":
        self._check(other)
        return RingElement((self.coeffs - other.coeffs) % self.ring.q, self.ring)

    def __neg__(self) -> "RingElement":
        return RingElement((-self.coeffs) % self.ring.q, self.ring)

    def __mul__(self, other) -> "RingElement":
        if isinstance(other, (int, np.integer)):
            return self.scale(int(other))
        return ring_mul(self, other)

    __rmul__ = __mul__

    def scale(self, k: int) -> "RingElement":
        q = self.ring.q
        k %= q
        if k < 2**62 // q:
            return RingElement((self.coeffs * k) % q, self.ring)
        big = (self.coeffs.astype(object) * k) % q
        return RingElement(big.astype(np.int64), self.ring)

    def lift(self) -> np.ndarray:
        return centered_lift(self)

    def norm(self) -> int:
        return inf_norm(self)

    def to_list(self) -> list[int]:
        return [int(c) for c in self.coeffs]


def ring_mul_schoolbook(a: RingElement, b: RingElement) -> RingElement:
    """Negacyclic product by the O(d^2) definition, in exact Python integers."""
    a._check(b)
    d, q = a.d, a.modulus
    outer = np.multiply.outer(a.coeffs.astype(object), b.coeffs.astype(object))
    idx = np.add.outer(np.arange(d), np.arange(d)).ravel()
    full = np.zeros(2 * d, dtype=object)
    np.add.at(full, idx, outer.ravel())
    return RingElement(((full[:d] - full[d:]) % q).astype(np.int64), a.ring)


def _slot_product(table, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    p = table.prime
    return mulmod(table.forward(x % p), table.forward(y % p), p)


def ring_mul(a: RingElement, b: RingElement) -> RingElement:
    """Product in R_q; NTT per prime factor when q allows it, else schoolbook."""
    a._check(b)
    primes = a.ring.ntt_primes
    if primes is None:
        return ring_mul_schoolbook(a, b)
    residues = []
    for p in primes:
        t = ntt_table(p, a.d)
        residues.append(t.inverse(_slot_product(t, a.coeffs, b.coeffs)))
    return RingElement(crt_combine(residues, primes), a.ring)


def ring_pow(e: RingElement, k: int) -> RingElement:
    if k < 0:
        raise ParameterError("negative ring powers are not supported")
    out = e.ring.constant(1)
    base = e
    while k:
        if k & 1:
            out = ring_mul(out, base)
        k >>= 1
        if k:
            base = ring_mul(base, base)
    return out


def ntt(e: RingElement, prime: int, direction: str = "forward"):
    """Evaluate ``e`` at the roots of x^d + 1 mod ``prime`` (ascending order).

    ``direction="inverse"`` takes a slot vector and returns the element of
    Z_prime[x]/(x^d + 1) that evaluates to it.
    """
    if direction == "forward":
        coeffs = e.coeffs if isinstance(e, RingElement) else np.asarray(e)
        d = coeffs.shape[-1]
        return ntt_table(prime, d).forward(coeffs % prime)
    if direction == "inverse":
        slots = np.asarray(e, dtype=np.int64)
        d = slots.shape[-1]
        return Ring(d, prime).element(ntt_table(prime, d).inverse(slots))
    raise ParameterError(f"direction must be 'forward' or 'inverse', not {direction!r}")


def crt_decompose(e: RingElement, split: CrtSplit) -> list[np.ndarray]:
    if split.d != e.d:
        raise ParameterError("split dimension does not match the element")
    return split.forward(e.coeffs)


def crt_reconstruct(parts: list[np.ndarray], split: CrtSplit, ring: Ring,
                    mod_product: bool = False) -> RingElement:
    """Inverse of :func:`crt_decompose`.

    Exact whenever the split primes multiply to at least ``q`` (or to a
    multiple of it).  With ``mod_product=True`` the result lives modulo the
    product of the split primes instead.
    """
    M = split.modulus
    coeffs = split.inverse(parts)
    if mod_product:
        return Ring(split.d, M, tuple((p, 1) for p in split.primes)).element(coeffs)
    if M % ring.q and M < ring.q:
        raise ParameterError(
            f"split modulus {M} < q={ring.q}; pass mod_product=True to work modulo {M}"
        )
    coeffs = np.asarray(coeffs)
    return ring.element(coeffs % ring.q)


def crt_round_trip(e: RingElement, split: CrtSplit):
    """Decompose then reconstruct; returns ``(parts, element)``."""
    parts = crt_decompose(e, split)
    return parts, crt_reconstruct(parts, split, e.ring)


def _automorphism_index(j: int, N: int) -> int:
    if j % 2 == 0 or gcd(j, N) != 1:
        raise ParameterError(f"automorphism index {j} is not a unit mod {N}")
    return j % N


def apply_automorphism(e: RingElement, j: int) -> RingElement:
    """sigma_j: x -> x^j, using x^d = -1 and x^(2d) = 1."""
    d = e.d
    N = 2 * d
    j = _automorphism_index(j, N)
    dest = (np.arange(d) * j) % N
    wrap = dest >= d
    dest = np.where(wrap, dest - d, dest)
    vals = np.where(wrap, -e.coeffs, e.coeffs) % e.modulus
    out = np.zeros(d, dtype=np.int64)
    out[dest] = vals
    return RingElement(out, e.ring)


def trace(e: RingElement) -> int:
    """Sum of all Galois conjugates; equals ``d * e_0 mod q`` for x^d + 1."""
    return (e.d * int(e.coeffs[0])) % e.modulus


def trace_explicit(e: RingElement) -> RingElement:
    """Explicit sum of sigma_j(e) over every odd j < 2d (the test oracle)."""
    total = e.ring.zero()
    for j in range(1, 2 * e.d, 2):
        total = total + apply_automorphism(e, j)
    return total


def centered_lift(e: RingElement) -> np.ndarray:
    return centered(e.coeffs, e.modulus)


def inf_norm(e: RingElement) -> int:
    if e.d == 0:
        return 0
    return int(np.abs(centered_lift(e)).max())


# kept for callers that want a ready-made split of the ring's own prime factors
def factor_split(ring: Ring) -> CrtSplit:
    primes = ring.ntt_primes
    if primes is None:
        raise NoSplitError(f"q={ring.q} is not a product of distinct NTT-friendly primes")
    return CrtSplit(primes, ring.d)
