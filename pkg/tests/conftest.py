from functools import lru_cache

import numpy as np
import pytest

from geoboot.bfv import keygen
from geoboot.params import preset
from geoboot.rng import stream


@lru_cache(maxsize=None)
def keys(name: str, seed: int = 0):
    params = preset(name, seed=seed)
    return params, *keygen(params, stream(seed, "keygen"))


def poly_eval(coeffs, x: int, prime: int) -> int:
    """Horner evaluation in Python integers."""
    acc = 0
    for c in reversed([int(v) for v in coeffs]):
        acc = (acc * x + c) % prime
    return acc


def negacyclic_mul(a, b, q: int) -> list[int]:
    """Textbook product modulo x^d + 1 on plain lists."""
    d = len(a)
    out = [0] * d
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            k = i + j
            if k < d:
                out[k] += int(ai) * int(bj)
            else:
                out[k - d] -= int(ai) * int(bj)
    return [v % q for v in out]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
