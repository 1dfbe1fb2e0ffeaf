"""Negacyclic NTT over word-sized primes and CRT splitting of x^n + 1.

Slot vectors are always ordered by ascending root value, not by the
bit-reversed order the butterfly network produces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import gmpy2
import numpy as np

from .errors import IntegrityError, NoSplitError, ParameterError

# a*b for a, b < 2**50 is recovered exactly from an int64 wrap-around product
# and a float64 quotient estimate; above this bound we fall back to Python ints.
VECTOR_PRIME_LIMIT = 2**50
_DIRECT_LIMIT = 2**31


def is_prime(n: int) -> bool:
    return n > 1 and bool(gmpy2.is_prime(n))


def mulmod(a: np.ndarray, b, m: int) -> np.ndarray:
    """Elementwise ``a*b mod m`` for int64 operands already reduced mod m."""
    if m < _DIRECT_LIMIT:
        return (a * b) % m
    if m >= VECTOR_PRIME_LIMIT:
        raise ParameterError(f"modulus {m} too large for vectorised mulmod")
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    quot = np.floor(a.astype(np.float64) * b.astype(np.float64) / float(m))
    with np.errstate(over="ignore"):
        r = a * b - quot.astype(np.int64) * np.int64(m)
    return r % m


def _bit_reverse(k: int, bits: int) -> int:
    return int(format(k, f"0{bits}b")[::-1], 2) if bits else 0


def _primitive_2n_root(prime: int, n2: int) -> int:
    # any x = y^((p-1)/n2) with x^(n2/2) = -1 has order exactly n2 (n2 a power of two)
    e = (prime - 1) // n2
    for y in range(2, prime):
        x = pow(y, e, prime)
        if pow(x, n2 // 2, prime) == prime - 1:
            return x
    raise NoSplitError(f"no primitive {n2}-th root of unity mod {prime}")


def _check_split(prime: int, N: int) -> None:
    if N < 2 or N & (N - 1):
        raise ParameterError(f"N={N} must be a power of two")
    if not is_prime(prime):
        raise ParameterError(f"{prime} is not prime")
    if (prime - 1) % N:
        raise NoSplitError(f"{prime} != 1 mod {N}: x^{N // 2}+1 does not split")


@lru_cache(maxsize=None)
def find_splitting_roots(prime: int, N: int) -> tuple[int, ...]:
    """All roots of ``x^(N/2) + 1`` modulo ``prime`` in ascending order."""
    _check_split(prime, N)
    psi = _primitive_2n_root(prime, N)
    return tuple(sorted(pow(psi, 2 * k + 1, prime) for k in range(N // 2)))


class NttTable:
    """Forward/inverse negacyclic transform of length ``n`` modulo ``prime``."""

    def __init__(self, prime: int, n: int):
        _check_split(prime, 2 * n)
        if prime >= VECTOR_PRIME_LIMIT:
            raise ParameterError(f"NTT prime {prime} exceeds {VECTOR_PRIME_LIMIT}")
        self.prime = prime
        self.n = n
        bits = n.bit_length() - 1
        psi = _primitive_2n_root(prime, 2 * n)
        psi_inv = pow(psi, -1, prime)
        brv = [_bit_reverse(k, bits) for k in range(n)]
        self.psi = psi
        self._psi_rev = np.array([pow(psi, b, prime) for b in brv], dtype=np.int64)
        self._psi_inv_rev = np.array([pow(psi_inv, b, prime) for b in brv], dtype=np.int64)
        self._n_inv = pow(n, -1, prime)
        # butterfly output i holds the evaluation at psi^(2*brv(i)+1)
        out_roots = np.array([pow(psi, 2 * b + 1, prime) for b in brv], dtype=np.int64)
        self.order = np.argsort(out_roots, kind="stable")
        self.unorder = np.argsort(self.order, kind="stable")
        self.roots = tuple(int(r) for r in out_roots[self.order])

    def forward(self, a: np.ndarray) -> np.ndarray:
        """Evaluate along the last axis at the roots, ascending order."""
        p, n = self.prime, self.n
        a = np.array(a, dtype=np.int64) % p
        lead = a.shape[:-1]
        out = np.empty_like(a)
        m, t = 1, n
        while m < n:
            t //= 2
            blk = a.reshape(*lead, m, 2, t)
            dst = out.reshape(*lead, m, 2, t)
            s = self._psi_rev[m : 2 * m].reshape(m, 1)
            u = blk[..., 0, :]
            v = mulmod(blk[..., 1, :], s, p)
            np.add(u, v, out=dst[..., 0, :])
            np.subtract(u, v, out=dst[..., 1, :])
            np.remainder(out, p, out=out)
            a, out = out, a
            m *= 2
        return a[..., self.order]

    def inverse(self, slots: np.ndarray) -> np.ndarray:
        p, n = self.prime, self.n
        a = np.array(slots, dtype=np.int64)[..., self.unorder] % p
        lead = a.shape[:-1]
        out = np.empty_like(a)
        m, t = n, 1
        while m > 1:
            h = m // 2
            blk = a.reshape(*lead, h, 2, t)
            dst = out.reshape(*lead, h, 2, t)
            s = self._psi_inv_rev[h:m].reshape(h, 1)
            u = blk[..., 0, :]
            v = blk[..., 1, :]
            np.remainder(u + v, p, out=dst[..., 0, :])
            dst[..., 1, :] = mulmod((u - v) % p, s, p)
            a, out = out, a
            t *= 2
            m = h
        return mulmod(a, self._n_inv, p)


@lru_cache(maxsize=None)
def ntt_table(prime: int, n: int) -> NttTable:
    return NttTable(prime, n)


def garner_constants(moduli: tuple[int, ...]) -> tuple[int, ...]:
    """Inverses of the running products used by mixed-radix recombination."""
    consts = []
    prod = 1
    for m in moduli:
        consts.append(pow(prod % m, -1, m) if prod > 1 else 1)
        prod *= m
    return tuple(consts)


def crt_combine(residues: list[np.ndarray], moduli: tuple[int, ...],
                consts: tuple[int, ...] | None = None) -> np.ndarray:
    """Recombine residue arrays into ``[0, prod(moduli))``.

    Stays in int64 when the product is below 2**62, otherwise returns an
    object array of Python ints.
    """
    if consts is None:
        consts = garner_constants(moduli)
    total = 1
    for m in moduli:
        total *= m
    if total < 2**62 and all(m < VECTOR_PRIME_LIMIT for m in moduli):
        x = np.array(residues[0], dtype=np.int64) % moduli[0]
        prod = moduli[0]
        for r, m, c in zip(residues[1:], moduli[1:], consts[1:]):
            diff = (np.asarray(r, dtype=np.int64) - x % m) % m
            v = mulmod(diff, c, m)
            x = x + v * prod
            prod *= m
        return x
    x = np.array(residues[0], dtype=object) % moduli[0]
    prod = moduli[0]
    for r, m, c in zip(residues[1:], moduli[1:], consts[1:]):
        v = ((np.asarray(r).astype(object) - x) * c) % m
        x = x + v * prod
        prod *= m
    return x


@dataclass(frozen=True, eq=False)
class CrtSplit:
    """CRT decomposition of Z[x]/(x^d + 1) over a set of primes.

    Each prime ``p_t`` must satisfy ``p_t = 1 mod 2*d/component_dim``.  With
    ``component_dim = 1`` this is full splitting into ``d`` slots per prime;
    larger powers of two group conjugate roots so that each component is
    ``Z_p[x]/(x^component_dim - zeta)`` stored as a length-``component_dim``
    coefficient vector.
    """

    primes: tuple[int, ...]
    d: int
    component_dim: int = 1
    roots: tuple[tuple[int, ...], ...] = field(init=False)
    recombination: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if not self.primes:
            raise ParameterError("CrtSplit needs at least one prime")
        if len(set(self.primes)) != len(self.primes):
            raise ParameterError("split primes must be distinct")
        dt = self.component_dim
        if dt < 1 or dt & (dt - 1) or self.d % dt:
            raise ParameterError("component_dim must be a power of two dividing d")
        m = self.d // dt
        roots = tuple(find_splitting_roots(p, 2 * m) for p in self.primes)
        object.__setattr__(self, "roots", roots)
        object.__setattr__(self, "recombination", garner_constants(self.primes))
        for p, r in zip(self.primes, roots):
            if self.table(p).roots != r:
                raise IntegrityError(f"evaluation table for {p} disagrees with root list")

    @property
    def modulus(self) -> int:
        out = 1
        for p in self.primes:
            out *= p
        return out

    @property
    def n_components(self) -> int:
        return self.d // self.component_dim

    def table(self, prime: int) -> NttTable:
        return ntt_table(prime, self.d // self.component_dim)

    def forward(self, coeffs) -> list[np.ndarray]:
        """Per prime, an ``(n_components, component_dim)`` residue array.

        ``coeffs`` may be any integers (signed, arbitrary size); they are
        reduced modulo each prime first.
        """
        arr = np.asarray(coeffs)
        if arr.shape[-1] != self.d:
            raise ParameterError(f"expected {self.d} coefficients, got {arr.shape[-1]}")
        out = []
        dt = self.component_dim
        for p in self.primes:
            red = (arr % p).astype(np.int64) if arr.dtype == object else arr.astype(np.int64) % p
            # column i collects coefficients i, i+dt, i+2dt, ...: c(x) = sum x^i C_i(x^dt)
            cols = red.reshape(*red.shape[:-1], self.n_components, dt)
            cols = np.swapaxes(cols, -1, -2)
            ev = self.table(p).forward(cols)
            out.append(np.swapaxes(ev, -1, -2))
        return out

    def inverse_per_prime(self, components: list[np.ndarray]) -> list[np.ndarray]:
        if len(components) != len(self.primes):
            raise IntegrityError("one component array per split prime is required")
        res = []
        for p, comp in zip(self.primes, components):
            comp = np.asarray(comp, dtype=np.int64)
            cols = self.table(p).inverse(np.swapaxes(comp, -1, -2))
            res.append(np.swapaxes(cols, -1, -2).reshape(*comp.shape[:-2], self.d))
        return res

    def inverse(self, components: list[np.ndarray]) -> np.ndarray:
        """Coefficients modulo the product of the split primes."""
        return crt_combine(self.inverse_per_prime(components), self.primes, self.recombination)
