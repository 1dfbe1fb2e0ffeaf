"""Public scheme parameters and named presets."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from math import gcd, prod

from .errors import DegeneratePlaintextError, ParameterError
from .ntt import is_prime

__all__ = ["Params", "PRESETS", "preset", "distinct_prime_factors"]

# Ring elements are stored as int64 and sums of two reduced values must not overflow.
MAX_MODULUS = 2**62


def distinct_prime_factors(n: int) -> tuple[int, ...]:
    """Distinct prime factors of a small integer, ascending (trial division)."""
    if n < 1:
        raise ParameterError("factorization needs a positive integer")
    out = []
    f = 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1 if f == 2 else 2
    if n > 1:
        out.append(n)
    return tuple(out)


@dataclass(frozen=True)
class Params:
    """All public parameters of one BFV instance.

    ``q_factors`` is the caller-supplied factorization of ``q`` as
    ``(prime, exponent)`` pairs; it is verified, never computed.
    """

    N: int
    q: int
    q_factors: tuple[tuple[int, int], ...]
    p: int
    sigma: float = 3.2
    kappa: int = 4
    seed: int = 0
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(
            self, "q_factors", tuple((int(f), int(e)) for f, e in self.q_factors)
        )
        N = self.N
        if N < 4 or N & (N - 1):
            raise ParameterError(f"N={N} must be a power of two >= 4")
        if not 1 < self.q < MAX_MODULUS:
            raise ParameterError(f"q={self.q} must lie in (1, 2**62)")
        if not self.q_factors:
            raise ParameterError("q_factors must not be empty")
        for f, e in self.q_factors:
            if e < 1 or not is_prime(f):
                raise ParameterError(f"bad factor {f}^{e} in q_factors")
        if len({f for f, _ in self.q_factors}) != len(self.q_factors):
            raise ParameterError("q_factors lists a prime twice")
        if prod(f**e for f, e in self.q_factors) != self.q:
            raise ParameterError("q_factors do not multiply to q")
        if self.p == 1:
            raise DegeneratePlaintextError("plaintext modulus 1 has no prime factors")
        if not 1 < self.p < self.q:
            raise ParameterError(f"plaintext modulus p={self.p} must satisfy 1 < p < q")
        if not self.sigma > 0:
            raise ParameterError("sigma must be positive")
        if self.kappa < 1:
            raise ParameterError("kappa must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")

    @property
    def d(self) -> int:
        return self.N // 2

    @property
    def delta(self) -> int:
        return self.q // self.p

    @property
    def projection_gcd(self) -> int:
        """gcd(delta, q): spacing of the per-coefficient projection lattice."""
        return gcd(self.delta, self.q)

    @property
    def projection_degenerate(self) -> bool:
        return self.projection_gcd == 1

    @property
    def q_bits(self) -> int:
        return self.q.bit_length()

    @property
    def ring(self):
        from .ring import Ring

        return Ring(self.d, self.q, self.q_factors)

    @property
    def plaintext_ring(self):
        from .ring import Ring

        return Ring(self.d, self.p, None)

    def replace(self, **changes) -> "Params":
        data = asdict(self)
        data.update(changes)
        return Params(**data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["q_factors"] = [list(f) for f in self.q_factors]
        data["d"] = self.d
        data["delta"] = self.delta
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Params":
        data = {k: v for k, v in data.items() if k not in ("d", "delta")}
        data["q_factors"] = tuple(tuple(f) for f in data["q_factors"])
        return cls(**data)


# 65537 = 1 mod 4096, so MEDIUM has p | q and a non-degenerate projection lattice.
_MEDIUM_PRIME = 17592186064897

PRESETS: dict[str, Params] = {
    "tiny": Params(N=16, q=17, q_factors=((17, 1),), p=2, name="tiny"),
    "small": Params(
        N=256, q=7681 * 12289, q_factors=((7681, 1), (12289, 1)), p=17, name="small"
    ),
    "medium": Params(
        N=2048,
        q=65537 * _MEDIUM_PRIME,
        q_factors=((65537, 1), (_MEDIUM_PRIME, 1)),
        p=65537,
        name="medium",
    ),
}


def preset(name: str, **overrides) -> Params:
    try:
        base = PRESETS[name.lower()]
    except KeyError:
        raise ParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return base.replace(**overrides) if overrides else base
