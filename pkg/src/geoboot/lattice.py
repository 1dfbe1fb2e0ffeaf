"""Exact integer lattices: Gram-Schmidt, LLL, Babai and a brute-force CVP oracle.

All decision paths use integers or ``fractions.Fraction``; there is no
floating point except to size enumeration boxes, and every float-derived
candidate is re-checked exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Sequence

from .errors import ParameterError, RankError

__all__ = [
    "LatticeBasis",
    "CvpSolution",
    "gram_schmidt",
    "determinant",
    "lattice_contains",
    "lll_reduce",
    "is_lll_reduced",
    "babai_nearest_plane",
    "cvp_bruteforce",
    "round_half_toward_zero",
    "projection_lattice_basis",
    "BRUTEFORCE_MAX_DIM",
]

BRUTEFORCE_MAX_DIM = 8

Vector = tuple[int, ...]


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def round_half_toward_zero(x: Fraction) -> int:
    x = Fraction(x)
    n = math.floor(x)
    frac = x - n
    if frac > Fraction(1, 2):
        return n + 1
    if frac < Fraction(1, 2):
        return n
    return n if x > 0 else n + 1


def determinant(rows: Sequence[Sequence[int]]) -> int:
    """Exact determinant of a square integer matrix (Bareiss elimination)."""
    m = [list(map(int, r)) for r in rows]
    n = len(m)
    if any(len(r) != n for r in m):
        raise ParameterError("determinant needs a square matrix")
    if all(x == 0 for i, r in enumerate(m) for j, x in enumerate(r) if i != j):
        return math.prod(m[i][i] for i in range(n))
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1] if n else 1


@dataclass(frozen=True)
class LatticeBasis:
    """Full-rank lattice generated by the integer row vectors ``rows``."""

    rows: tuple[Vector, ...]

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ParameterError("basis must be a non-empty square integer matrix")
        if determinant(rows) == 0:
            raise RankError("basis rows are linearly dependent")

    @classmethod
    def diagonal(cls, entry: int, dim: int) -> "LatticeBasis":
        return cls(tuple(tuple(entry if i == j else 0 for j in range(dim)) for i in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def det(self) -> int:
        return abs(determinant(self.rows))

    def combine(self, coeffs: Sequence[int]) -> Vector:
        return tuple(sum(c * r[k] for c, r in zip(coeffs, self.rows)) for k in range(self.dim))


@dataclass(frozen=True)
class CvpSolution:
    vector: Vector
    coeffs: Vector
    distance_sq: Fraction


def gram_schmidt(rows: Sequence[Sequence[int]]):
    """Return ``(bstar, mu, norms)`` with exact rationals."""
    n = len(rows)
    bstar: list[list[Fraction]] = []
    norms: list[Fraction] = []
    mu = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        v = [Fraction(x) for x in rows[i]]
        for j in range(i):
            if norms[j] == 0:
                continue
            mu[i][j] = _dot(rows[i], bstar[j]) / norms[j]
            v = [a - mu[i][j] * b for a, b in zip(v, bstar[j])]
        bstar.append(v)
        norms.append(_dot(v, v))
    return bstar, mu, norms


def _solve(rows: Sequence[Sequence[int]], v: Sequence) -> list[Fraction] | None:
    """Solve ``x @ rows = v`` exactly; None if singular."""
    n = len(rows)
    # transpose: sum_i x_i rows[i][k] = v[k]
    a = [[Fraction(rows[i][k]) for i in range(n)] + [Fraction(v[k])] for k in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[k][n] for k in range(n)]


def lattice_contains(basis: LatticeBasis, v: Sequence[int]) -> bool:
    x = _solve(basis.rows, v)
    return x is not None and all(c.denominator == 1 for c in x)


def lll_reduce(basis: LatticeBasis, delta: Fraction = Fraction(3, 4)) -> LatticeBasis:
    """Textbook LLL over the rationals."""
    delta = Fraction(delta)
    if not Fraction(1, 4) < delta <= 1:
        raise ParameterError("LLL delta must lie in (1/4, 1]")
    b = [list(r) for r in basis.rows]
    n = len(b)
    _, mu, norms = gram_schmidt(b)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            r = round_half_toward_zero(mu[k][j])
            if r:
                b[k] = [x - r * y for x, y in zip(b[k], b[j])]
                for i in range(j + 1):
                    mu[k][i] -= r * (mu[j][i] if i < j else 1)
        if norms[k] >= (delta - mu[k][k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            _, mu, norms = gram_schmidt(b)
            k = max(k - 1, 1)
    return LatticeBasis(tuple(tuple(r) for r in b))


def is_lll_reduced(basis: LatticeBasis, delta: Fraction = Fraction(3, 4)) -> bool:
    _, mu, norms = gram_schmidt(basis.rows)
    n = basis.dim
    for i in range(n):
        for j in range(i):
            if abs(mu[i][j]) > Fraction(1, 2):
                return False
    return all(norms[k] >= (delta - mu[k][k - 1] ** 2) * norms[k - 1] for k in range(1, n))


def _dist_sq(v, t) -> Fraction:
    return sum((Fraction(a) - Fraction(b)) ** 2 for a, b in zip(v, t))


def babai_nearest_plane(basis: LatticeBasis, target: Sequence) -> CvpSolution:
    """Nearest-plane rounding; per-plane ties go toward zero."""
    if len(target) != basis.dim:
        raise ParameterError("target dimension does not match the basis")
    bstar, _, norms = gram_schmidt(basis.rows)
    residual = [Fraction(x) for x in target]
    coeffs = [0] * basis.dim
    for j in range(basis.dim - 1, -1, -1):
        c = round_half_toward_zero(_dot(residual, bstar[j]) / norms[j])
        coeffs[j] = c
        if c:
            residual = [r - c * x for r, x in zip(residual, basis.rows[j])]
    vec = basis.combine(coeffs)
    return CvpSolution(vec, tuple(coeffs), _dist_sq(vec, target))


def cvp_bruteforce(basis: LatticeBasis, target: Sequence, radius_hint=None) -> CvpSolution:
    """Exact closest vector by Fincke-Pohst enumeration.

    Enumerates every coefficient vector whose lattice point lies within
    ``radius_hint`` of the target (default: the Babai distance, which is
    always achievable).  Among the closest points the lexicographically
    smallest coefficient vector wins.
    """
    n = basis.dim
    if n > BRUTEFORCE_MAX_DIM:
        raise ParameterError(f"brute-force CVP refused above dimension {BRUTEFORCE_MAX_DIM}")
    if len(target) != n:
        raise ParameterError("target dimension does not match the basis")
    babai = babai_nearest_plane(basis, target)
    radius_sq = babai.distance_sq if radius_hint is None else Fraction(radius_hint) ** 2
    found = _enumerate(basis, target, radius_sq)
    if not found:
        found = _enumerate(basis, target, babai.distance_sq)
    best = min(d for d, _ in found)
    coeffs = min(c for d, c in found if d == best)
    return CvpSolution(basis.combine(coeffs), coeffs, best)


def _enumerate(basis: LatticeBasis, target, radius_sq: Fraction):
    n = basis.dim
    bstar, mu, norms = gram_schmidt(basis.rows)
    tau = [_dot(target, bstar[j]) / norms[j] for j in range(n)]
    out = []
    x = [0] * n

    def rec(j: int, rem: Fraction):
        if j < 0:
            vec = basis.combine(x)
            d = _dist_sq(vec, target)
            if d <= radius_sq:
                out.append((d, tuple(x)))
            return
        center = tau[j] - sum(mu[i][j] * x[i] for i in range(j + 1, n))
        half = math.sqrt(float(rem / norms[j])) if rem > 0 else 0.0
        lo = math.floor(float(center) - half) - 1
        hi = math.ceil(float(center) + half) + 1
        for xj in range(lo, hi + 1):
            used = (xj - center) ** 2 * norms[j]
            if used <= rem:
                x[j] = xj
                rec(j - 1, rem - used)
        x[j] = 0

    rec(n - 1, Fraction(radius_sq))
    return out


def projection_lattice_basis(params, mode: str = "coefficient", prime: int | None = None,
                             component_dim: int = 1) -> LatticeBasis:
    """Canonical (Hermite normal form) basis of the projection lattice.

    ``coefficient``: the lattice Delta*Z^d + q*Z^d, i.e. ``gcd(Delta, q) * I_d``.
    ``component``: the image of that lattice in one CRT component modulo
    ``prime``, lifted to Z^component_dim: ``gcd(gcd(Delta, q), prime) * I``.
    """
    g = gcd(params.delta, params.q)
    if mode == "coefficient":
        return LatticeBasis.diagonal(g, params.d)
    if mode == "component":
        if prime is None:
            raise ParameterError("component mode needs the split prime")
        return LatticeBasis.diagonal(gcd(g, prime), component_dim)
    raise ParameterError(f"unknown projection mode {mode!r}")
