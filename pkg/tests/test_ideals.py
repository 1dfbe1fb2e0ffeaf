from fractions import Fraction

import numpy as np
import pytest

from conftest import keys
from geoboot.bfv import Ciphertext, DiscreteGaussian, encrypt, inject_noise
from geoboot.errors import CalibrationRequiredError, DegeneratePlaintextError, ParameterError
from geoboot.ideals import (
    GeneratorSet,
    Magnitude,
    Moment,
    Structural,
    automorphism_schedule,
    calibrate,
    central_moment,
    construct_fresh_generators,
    construct_noise_generators,
    eval_relation,
    evaluate_relations,
    is_in_vanishing_set,
    lift_reduce_psi,
    nilpotency_index,
    round_delta,
)
from geoboot.params import Params, preset
from geoboot.ring import Ring, apply_automorphism, inf_norm, ring_mul
from geoboot.rng import stream


@pytest.fixture(scope="module")
def tiny_fresh():
    params, sk, pk = keys("tiny")
    gens = calibrate(construct_fresh_generators(params, pk), pk, trials=300, seed=11)
    return params, sk, pk, gens


def test_nilpotency_index():
    assert nilpotency_index(((17, 1),)) == 1
    assert nilpotency_index(((2, 3),)) == 3
    assert nilpotency_index(((2, 2), (3, 1))) == 2
    with pytest.raises(ParameterError):
        nilpotency_index(())


def test_nilpotency_index_against_radical_powers():
    for factors in (((2, 3),), ((2, 2), (3, 1)), ((3, 2), (5, 1)), ((7, 1),)):
        q = 1
        rad = 1
        for f, e in factors:
            q *= f**e
            rad *= f
        k = next(k for k in range(1, 10) if pow(rad, k, q) == 0)
        assert nilpotency_index(factors) == k


def test_relation_counts():
    params, _, pk = keys("small")
    assert len(construct_noise_generators(params, pk, 4)) == 5
    fresh = construct_fresh_generators(params, pk, kappa=4)
    assert len(fresh) == 9
    p6 = Params(N=16, q=97 * 193, q_factors=((97, 1), (193, 1)), p=6)
    from geoboot.bfv import keygen

    _, pk6 = keygen(p6, stream(0))
    noise6 = construct_noise_generators(p6, pk6, 2)
    assert [r.p_i for r in noise6.relations[:2]] == [2, 3]
    assert len(noise6) == 4


def test_construction_deterministic_and_prefix():
    params, _, pk = keys("small")
    a = construct_noise_generators(params, pk)
    b = construct_noise_generators(params, pk)
    assert a.relations == b.relations
    fresh = construct_fresh_generators(params, pk)
    assert fresh.relations[: len(a)] == a.relations
    chi = DiscreteGaussian(params.sigma)
    moments = [r for r in fresh.relations if isinstance(r, Moment)]
    assert [r.mu for r in moments] == [chi.moment(i) for i in range(1, 5)]


def test_degenerate_plaintext():
    with pytest.raises(DegeneratePlaintextError):
        Params(N=16, q=17, q_factors=((17, 1),), p=1)


def test_schedule():
    assert automorphism_schedule(16, 3) == (3, 9, 11)
    assert len(set(automorphism_schedule(512, 4))) == 4
    with pytest.raises(ParameterError):
        automorphism_schedule(16, 5)


def test_psi_examples(rng):
    ring = Ring(8, 17)
    e = ring.element([7, 3, 8, 0, 16, 9, 1, 4])
    out = lift_reduce_psi(e, 2)
    assert out.to_list()[:2] == [8, 0]
    fixed = ring.element([8, 0, 9, 0, 8, 9, 0, 0])
    assert lift_reduce_psi(fixed, 2) == fixed
    params = preset("small")
    for _ in range(1000):
        x = params.ring.random(rng)
        once = lift_reduce_psi(x, 17)
        assert lift_reduce_psi(once, 17) == once
    with pytest.raises(ParameterError):
        lift_reduce_psi(params.ring.zero(), 5, params)


def test_magnitude_vanishes_on_scaled_message():
    params, _, pk = keys("medium")
    ct = encrypt(pk, np.arange(params.d) % params.p, None, noiseless=True)
    assert eval_relation(Magnitude(params.p), ct) == params.ring.zero()


def test_magnitude_value_formula(rng):
    params, _, pk = keys("small")
    ct = encrypt(pk, 3, rng)
    step = params.q // 17
    c0 = [int(v) for v in ct.c0.coeffs]
    expected = []
    for v in c0:
        x = v if v < (params.q + 1) // 2 else v - params.q
        r = x % step
        y = x - r + (step if 2 * r > step or (2 * r == step and x < 0) else 0)
        if y >= (params.q + 1) // 2:
            y -= step
        if y < -(params.q // 2):
            y += step
        expected.append((step * (x - y)) % params.q)
    assert eval_relation(Magnitude(17), ct).to_list() == expected


def test_moment_on_noise_free_ct():
    params, _, pk = keys("medium")
    ct = encrypt(pk, 7, None, noiseless=True)
    assert eval_relation(Moment(1, Fraction(0)), ct) == 0
    chi = DiscreteGaussian(params.sigma)
    assert eval_relation(Moment(2, chi.moment(2)), ct) == -chi.moment(2)


def test_structural_value_formula(rng):
    params, _, pk = keys("small")
    ct = encrypt(pk, 1, rng)
    rel = construct_noise_generators(params, pk).relations[1]
    g = ring_mul(apply_automorphism(ct.c1, rel.j), apply_automorphism(pk.a, rel.j)) + ring_mul(
        apply_automorphism(ct.c0, rel.j), apply_automorphism(pk.b, rel.j))
    err = g - round_delta(g, params.delta)
    assert eval_relation(rel, ct) == err
    assert inf_norm(err) <= params.delta // 2 + 1


def test_structural_covariance(rng):
    params, _, pk = keys("small")
    ct = encrypt(pk, 2, rng)
    j = 3
    moved = Ciphertext(apply_automorphism(ct.c0, j), apply_automorphism(ct.c1, j), params)
    aligned = Structural(1, apply_automorphism(pk.a, j), apply_automorphism(pk.b, j), 1)
    original = Structural(j, apply_automorphism(pk.a, j), apply_automorphism(pk.b, j), 1)
    assert eval_relation(aligned, moved) == eval_relation(original, ct)


def test_batch_evaluator_matches_single(rng):
    params, _, pk = keys("small")
    gens = construct_fresh_generators(params, pk)
    ct = encrypt(pk, 5, rng)
    assert evaluate_relations(gens, ct) == [eval_relation(r, ct) for r in gens.relations]


def test_eval_rejects_foreign_params(rng):
    params, _, pk = keys("small")
    gens = construct_noise_generators(params, pk)
    other = encrypt(keys("tiny")[2], 1, rng)
    with pytest.raises(ParameterError):
        evaluate_relations(gens, other)
    with pytest.raises(ParameterError):
        eval_relation(gens.relations[1], other)


def test_central_moments():
    chi = DiscreteGaussian(3.2)
    assert central_moment(chi, 1) == 0
    assert central_moment(chi, 3) == 0
    # direct enumeration from the exact probabilities
    m2 = sum(Fraction(x * x) * chi.probability(x) for x in range(-20, 21))
    m4 = sum(Fraction(x**4) * chi.probability(x) for x in range(-20, 21))
    assert central_moment(chi, 2) == m2
    assert abs(float(m2) - 10.24) / 10.24 < 0.05
    assert abs(float(m4 / m2**2) - 3) / 3 < 0.10


def test_uncalibrated_membership_raises():
    params, _, pk = keys("tiny")
    gens = construct_noise_generators(params, pk)
    with pytest.raises(CalibrationRequiredError):
        is_in_vanishing_set(gens, encrypt(pk, 0, None, noiseless=True))


def test_calibration_record(tiny_fresh):
    params, _, _, gens = tiny_fresh
    cal = gens.calibration
    assert cal["trials"] == 300 and cal["margin"] == "11/10"
    assert len(cal["max_observed"]) == len(gens) == len(cal["exact_zero_rate"])
    assert all(t >= 0 for t in gens.tolerances)
    assert all(isinstance(t, Fraction) for r, t in zip(gens.relations, gens.tolerances)
               if isinstance(r, Moment))


def test_zero_ciphertext_passes(tiny_fresh):
    params, _, _, gens = tiny_fresh
    zero = Ciphertext(params.ring.zero(), params.ring.zero(), params)
    noise_only = GeneratorSet(gens.params, gens.relations[:5], "noise", gens.tolerances[:5],
                              gens.calibration, gens.pk_digest)
    report = is_in_vanishing_set(noise_only, zero)
    assert report.passed and all(report.exact_zero)


def test_holdout_completeness(tiny_fresh):
    params, _, pk, gens = tiny_fresh
    passed = sum(is_in_vanishing_set(gens, encrypt(pk, int(stream(12, t).integers(0, 2)), stream(12, "h", t))).passed
                 for t in range(300))
    assert passed / 300 >= 0.99


def test_ideal_closure_on_exact_zero(rng):
    params, _, pk = keys("medium")
    gens = construct_noise_generators(params, pk)
    ct = encrypt(pk, 0, None, noiseless=True)
    values = [eval_relation(r, ct) for r in gens.relations]
    assert all(v == params.ring.zero() for v in values)
    for _ in range(100):
        total = params.ring.zero()
        for v in values:
            total = total + ring_mul(params.ring.random(rng), v)
        assert total == params.ring.zero()


def test_monotone_containment(tiny_fresh):
    params, _, pk, fresh = tiny_fresh
    n = len(fresh) - 4
    noise = GeneratorSet(params, fresh.relations[:n], "noise", fresh.tolerances[:n],
                         fresh.calibration, fresh.pk_digest)
    for t in range(100):
        rng = stream(13, t)
        ct = inject_noise(encrypt(pk, 1, rng), 8, rng)
        if not is_in_vanishing_set(noise, ct).passed:
            assert not is_in_vanishing_set(fresh, ct).passed


def test_serialization_round_trip(tiny_fresh):
    _, _, _, gens = tiny_fresh
    back = GeneratorSet.loads(gens.dumps())
    assert back.relations == gens.relations
    assert back.tolerances == gens.tolerances
    assert back.calibration == gens.calibration
    assert back.dumps() == gens.dumps()
    with pytest.raises(ParameterError):
        GeneratorSet.from_document({"schema_version": 99})


def test_calibration_deterministic():
    params, _, pk = keys("tiny")
    gens = construct_noise_generators(params, pk)
    assert calibrate(gens, pk, 50, seed=3).dumps() == calibrate(gens, pk, 50, seed=3).dumps()
