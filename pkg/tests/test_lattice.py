import itertools
from fractions import Fraction

import numpy as np
import pytest
from sympy import Matrix
from sympy.matrices.normalforms import hermite_normal_form

from geoboot.errors import ParameterError, RankError
from geoboot.lattice import (
    LatticeBasis,
    babai_nearest_plane,
    cvp_bruteforce,
    determinant,
    gram_schmidt,
    is_lll_reduced,
    lattice_contains,
    lll_reduce,
    projection_lattice_basis,
    round_half_toward_zero,
)
from geoboot.params import preset


def _box_cvp(basis, target, span=6):
    """Exhaustive oracle over a coefficient box."""
    best = None
    for c in itertools.product(range(-span, span + 1), repeat=basis.dim):
        v = basis.combine(c)
        dist = sum((Fraction(a) - Fraction(b)) ** 2 for a, b in zip(v, target))
        if best is None or (dist, c) < best:
            best = (dist, c)
    return best


def _random_basis(rng, dim, lo=-50, hi=50):
    while True:
        rows = rng.integers(lo, hi + 1, size=(dim, dim))
        if round(np.linalg.det(rows)) != 0 and determinant(rows) != 0:
            return LatticeBasis(rows)


def test_round_half_toward_zero():
    assert [round_half_toward_zero(Fraction(x, 2)) for x in (-3, -1, 1, 3, 5)] == [-1, 0, 0, 1, 2]
    assert round_half_toward_zero(Fraction(7, 5)) == 1
    assert round_half_toward_zero(Fraction(-8, 5)) == -2


def test_determinant_matches_sympy(rng):
    for _ in range(30):
        rows = rng.integers(-9, 10, size=(5, 5)).tolist()
        assert determinant(rows) == Matrix(rows).det()


def test_dependent_rows_rejected():
    with pytest.raises(RankError):
        LatticeBasis(((1, 2), (2, 4)))
    with pytest.raises(ParameterError):
        LatticeBasis(((1, 2, 3), (4, 5, 6)))


def test_gram_schmidt_orthogonal(rng):
    basis = _random_basis(rng, 4)
    bstar, _, norms = gram_schmidt(basis.rows)
    for i in range(4):
        for j in range(i):
            assert sum(a * b for a, b in zip(bstar[i], bstar[j])) == 0
    prod = 1
    for n in norms:
        prod *= n
    assert prod == basis.det**2


def test_lll_identity_and_2d_example():
    ident = LatticeBasis.diagonal(1, 3)
    assert lll_reduce(ident) == ident
    red = lll_reduce(LatticeBasis(((1, 1), (2, 0))))
    assert sum(x * x for x in red.rows[0]) <= 2
    assert red.det == 2
    # every vector of the lattice has squared norm >= 2, so 2 is optimal
    shortest = min(
        sum(x * x for x in LatticeBasis(((1, 1), (2, 0))).combine(c))
        for c in itertools.product(range(-3, 4), repeat=2) if c != (0, 0)
    )
    assert shortest == 2


def test_lll_random_4d(rng):
    for _ in range(100):
        basis = _random_basis(rng, 4)
        red = lll_reduce(basis)
        assert is_lll_reduced(red)
        assert red.det == basis.det
        assert all(lattice_contains(basis, r) for r in red.rows)
        assert all(lattice_contains(red, r) for r in basis.rows)


def test_lll_rejects_bad_delta():
    with pytest.raises(ParameterError):
        lll_reduce(LatticeBasis.diagonal(1, 2), Fraction(1, 5))


def test_babai_identity_rounding():
    sol = babai_nearest_plane(LatticeBasis.diagonal(1, 3),
                              [Fraction(2, 5), Fraction(-3, 5), Fraction(6, 5)])
    assert sol.vector == (0, -1, 1)


def test_babai_vs_optimum_2d_example():
    basis = LatticeBasis(((1, 1), (0, 3)))
    babai = babai_nearest_plane(basis, (0, 2))
    opt = cvp_bruteforce(basis, (0, 2))
    assert opt.distance_sq == 1
    assert babai.distance_sq <= 2**2 * opt.distance_sq
    assert _box_cvp(basis, (0, 2))[0] == 1


def test_bruteforce_tie_break_examples():
    sol = cvp_bruteforce(LatticeBasis(((2, 0), (0, 2))), (1, 1))
    assert sol.coeffs == (0, 0) and sol.distance_sq == 2
    # (0,3) and (-1,2) are both at distance 1; the smallest coefficient vector wins
    sol = cvp_bruteforce(LatticeBasis(((1, 1), (0, 3))), (0, 2))
    assert sol.distance_sq == 1
    assert sol.coeffs == _box_cvp(LatticeBasis(((1, 1), (0, 3))), (0, 2))[1]
    assert sol.vector == (-1, 2)


def test_bruteforce_lattice_point_target(rng):
    basis = _random_basis(rng, 3, -9, 9)
    point = basis.combine((2, -1, 3))
    sol = cvp_bruteforce(basis, point)
    assert sol.vector == point and sol.distance_sq == 0


def test_bruteforce_matches_box_oracle(rng):
    for _ in range(12):
        basis = lll_reduce(_random_basis(rng, 3, -5, 5))
        target = [Fraction(int(x), 4) for x in rng.integers(-12, 13, size=3)]
        sol = cvp_bruteforce(basis, target)
        dist, coeffs = _box_cvp(basis, target, span=9)
        assert max(abs(c) for c in coeffs) < 9
        assert sol.distance_sq == dist
        assert sol.coeffs == coeffs


def test_bruteforce_dimension_guard():
    with pytest.raises(ParameterError):
        cvp_bruteforce(LatticeBasis.diagonal(1, 9), [0] * 9)


def test_babai_within_bound_on_random_4d(rng):
    exact = 0
    for _ in range(100):
        basis = lll_reduce(_random_basis(rng, 4))
        target = [Fraction(int(x), 7) for x in rng.integers(-700, 701, size=4)]
        babai = babai_nearest_plane(basis, target)
        opt = cvp_bruteforce(basis, target)
        assert babai.distance_sq <= 2**4 * opt.distance_sq
        assert opt.distance_sq <= babai.distance_sq
        assert basis.combine(babai.coeffs) == babai.vector
        exact += babai.distance_sq == opt.distance_sq
    assert exact >= 1


@pytest.mark.parametrize("name", ["tiny", "small", "medium"])
def test_projection_basis_is_hnf(name):
    params = preset(name)
    dim = 4
    rows = [[params.delta if i == j else 0 for j in range(dim)] for i in range(dim)]
    rows += [[params.q if i == j else 0 for j in range(dim)] for i in range(dim)]
    hnf = hermite_normal_form(Matrix(rows).T).T
    nonzero = [list(r) for r in hnf.tolist() if any(r)]
    got = projection_lattice_basis(params.replace(N=2 * dim) if params.d != dim else params)
    assert [list(r) for r in got.rows] == [[abs(x) for x in r] for r in sorted(nonzero, key=lambda r: [-abs(x) for x in r])]


def test_projection_basis_examples():
    tiny, medium = preset("tiny"), preset("medium")
    assert projection_lattice_basis(tiny).rows[0][0] == 1
    assert projection_lattice_basis(medium).rows[0][0] == medium.delta
    assert projection_lattice_basis(medium, "component", prime=65537).rows == ((1,),)
    assert projection_lattice_basis(medium, "component", prime=17592186064897).rows == ((17592186064897,),)
    with pytest.raises(ParameterError):
        projection_lattice_basis(medium, "component")
