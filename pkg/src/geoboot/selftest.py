"""Fast invariant suites behind ``geoboot selftest``."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .bfv import DiscreteGaussian, decrypt, encrypt, keygen
from .folding import build_fold_plan, fold_project
from .harness import check_golden, demo_split_record, load_golden
from .ideals import calibrate, construct_noise_generators, is_in_vanishing_set, lift_reduce_psi
from .lattice import LatticeBasis, babai_nearest_plane, cvp_bruteforce, lll_reduce
from .params import preset
from .ring import apply_automorphism, ring_mul, ring_mul_schoolbook
from .rng import stream

__all__ = ["run_selftest", "SUITES"]


def _ring(rng):
    n = 0
    for name in ("tiny", "small"):
        ring = preset(name).ring
        for _ in range(10):
            a, b = ring.random(rng), ring.random(rng)
            assert ring_mul(a, b) == ring_mul_schoolbook(a, b)
            j = 3
            assert apply_automorphism(ring_mul(a, b), j) == ring_mul(
                apply_automorphism(a, j), apply_automorphism(b, j))
            n += 2
    return n


def _bfv(rng):
    params = preset("small")
    sk, pk = keygen(params, rng)
    for _ in range(20):
        m = rng.integers(0, params.p, size=params.d)
        assert decrypt(sk, encrypt(pk, m, rng)).to_list() == [int(x) for x in m]
    chi = DiscreteGaussian(params.sigma)
    assert chi.moment(1) == 0 and chi.moment(3) == 0
    return 22


def _ideals(rng):
    params = preset("tiny")
    sk, pk = keygen(params, rng)
    gens = calibrate(construct_noise_generators(params, pk), pk, trials=50, seed=1)
    ok = sum(is_in_vanishing_set(gens, encrypt(pk, int(rng.integers(0, 2)), rng)).passed
             for _ in range(20))
    assert ok >= 19
    e = params.ring.random(rng)
    once = lift_reduce_psi(e, 2)
    assert lift_reduce_psi(once, 2) == once
    return 21


def _lattice(rng):
    n = 0
    for _ in range(20):
        rows = rng.integers(-6, 7, size=(3, 3))
        try:
            basis = LatticeBasis(rows)
        except ValueError:
            continue
        target = [Fraction(int(x), 3) for x in rng.integers(-20, 21, size=3)]
        reduced = lll_reduce(basis)
        opt = cvp_bruteforce(reduced, target).distance_sq
        assert babai_nearest_plane(reduced, target).distance_sq <= (2**3) * opt
        n += 1
    return n


def _folding(rng):
    n = 0
    for name in ("tiny", "small", "medium"):
        params = preset(name)
        plan = build_fold_plan(params, source="q-factors")
        for _ in range(5):
            e = params.ring.random(rng)
            for mode in ("coefficient", "evaluation"):
                x = fold_project(e, plan, mode)
                assert fold_project(x, plan, mode) == x
                n += 1
    return n


def _golden(golden_path=None):
    bad = check_golden(demo_split_record(), load_golden(golden_path))
    assert not bad, f"mismatch in {', '.join(bad)}"
    return 1


SUITES = ("ring", "bfv", "ideals", "lattice", "folding", "golden")


def run_selftest(seed: int = 0, golden_path=None) -> dict:
    """Run every suite; returns ``{name: (passed, checks, detail)}``."""
    runners = {
        "ring": _ring,
        "bfv": _bfv,
        "ideals": _ideals,
        "lattice": _lattice,
        "folding": _folding,
    }
    results = {}
    for name in SUITES:
        try:
            if name == "golden":
                count = _golden(golden_path)
            else:
                count = runners[name](stream(seed, "selftest", name))
            results[name] = (True, count, "")
        except Exception as exc:  # a suite failure of any kind is reported, not raised
            results[name] = (False, 0, f"{type(exc).__name__}: {exc}")
    return results
