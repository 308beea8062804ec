import numpy as np
import pytest

from tte.config import Caps, ResourceCapError
from tte.ginibre import (
    GinibreError,
    GinibreModel,
    catalan,
    compare_bound,
    enumerate_theta,
    exact_expectation,
    free_limit,
    is_noncrossing,
    mc_expectation,
    pairing_term_exponent,
    tau_chain,
    theta_to_sigma,
)
from tte.perm import Permutation, identity
from tte.tensor import random_unitary

REL_TOL = 1e-9


def _model(m, d1, d2, seed, n_base=2):
    dim = n_base ** (d1 + d2)
    a = tuple(random_unitary(dim, [seed, 0, i]) for i in range(m))
    b = tuple(random_unitary(dim, [seed, 1, i]) for i in range(m))
    return GinibreModel(m, d1, d2, n_base, a, b)


def test_catalan_values():
    assert [catalan(m) for m in range(6)] == [1, 1, 2, 5, 14, 42]


def test_enumerate_theta_counts_and_order():
    thetas = list(enumerate_theta(3))
    assert len(thetas) == 6
    assert thetas[0] == identity(3)
    images = [t.images for t in thetas]
    assert images == sorted(images)
    with pytest.raises(ResourceCapError):
        list(enumerate_theta(3, Caps(max_theta_m=2)))


def test_noncrossing_census():
    for m in (1, 2, 3, 4):
        count = sum(1 for t in enumerate_theta(m) if is_noncrossing(t))
        assert count == catalan(m)
    crossing = [t for t in enumerate_theta(3) if not is_noncrossing(t)]
    assert [t.images for t in crossing] == [(2, 3, 1)]


def test_theta_to_sigma_instances():
    assert theta_to_sigma(identity(2)).images == (3, 2, 1, 4)
    assert theta_to_sigma(Permutation(2, (2, 1))).images == (1, 4, 3, 2)


def test_theta_to_sigma_backward_count_is_m_plus_one():
    for m in (1, 2, 3, 4):
        for theta in enumerate_theta(m):
            assert theta_to_sigma(theta).backward_count() == m + 1


def test_tau_chain():
    assert tau_chain(1).images == (2, None)
    assert tau_chain(3).images == (2, 3, 4, 5, 6, None)
    assert tau_chain(2).backward_count() == 0
    with pytest.raises(GinibreError):
        tau_chain(0)


def test_noncrossing_terms_attain_predicted_exponent():
    for m in (1, 2, 3):
        for theta in enumerate_theta(m):
            if not is_noncrossing(theta):
                continue
            te = pairing_term_exponent(theta, 1, 1)
            assert te.noncrossing
            assert te.report.result.M == te.predicted == 1 + m
            assert te.ok


def test_crossing_term_stays_below_bound():
    crossing = Permutation(3, (2, 3, 1))
    te1 = pairing_term_exponent(crossing, 1, 1)
    assert not te1.noncrossing
    assert te1.report.result.M == 3
    assert te1.crossing_bound == 4
    assert te1.ok
    te2 = pairing_term_exponent(crossing, 2, 1)
    assert te2.report.result.M == 5
    assert te2.predicted == 8
    assert te2.crossing_bound == 7
    assert te2.ok
    with pytest.raises(GinibreError):
        pairing_term_exponent(crossing, 0, 1)


def test_model_validation():
    eye = np.eye(4)
    with pytest.raises(GinibreError):
        GinibreModel(0, 1, 1, 2, (), ())
    with pytest.raises(GinibreError):
        GinibreModel(1, 0, 1, 2, (eye,), (eye,))
    with pytest.raises(GinibreError):
        GinibreModel(1, 1, 1, 1, (eye,), (eye,))
    with pytest.raises(GinibreError):
        GinibreModel(2, 1, 1, 2, (eye,), (eye, eye))
    with pytest.raises(GinibreError):
        GinibreModel(1, 1, 1, 2, (np.eye(2),), (eye,))


def test_model_dimensions_and_word_order():
    mod = _model(2, 2, 1, 51)
    assert mod.n == 4
    assert mod.p_dim == 2
    assert mod.dim == 8
    word = mod.word_mats()
    assert len(word) == 4
    assert np.array_equal(word[0], mod.a_mats[0])
    assert np.array_equal(word[1], mod.b_mats[0])
    assert np.array_equal(word[3], mod.b_mats[1])


def test_identity_word_expectation_is_identity():
    mod = GinibreModel(1, 1, 1, 2, (np.eye(4),), (np.eye(4),))
    got = exact_expectation(mod)
    assert np.allclose(got, np.eye(2), atol=REL_TOL)


def test_exact_equals_free_below_m_three():
    for m in (1, 2):
        mod = _model(m, 1, 1, 52 + m)
        assert np.array_equal(exact_expectation(mod), free_limit(mod))


def test_exact_splits_into_free_plus_crossing_terms():
    mod = _model(3, 1, 1, 55)
    gap = exact_expectation(mod) - free_limit(mod)
    # exactly one crossing pairing contributes at m = 3
    assert np.max(np.abs(gap)) > 0.0
    assert np.max(np.abs(gap)) <= 1.0


def test_compare_bound_requires_wide_split():
    mod = _model(2, 1, 1, 56)
    with pytest.raises(GinibreError):
        compare_bound(mod)


def test_compare_bound_requires_contractions():
    dim = 8
    big = tuple(2.0 * np.eye(dim) for _ in range(2))
    mod = GinibreModel(2, 2, 1, 2, big, big)
    with pytest.raises(GinibreError):
        compare_bound(mod)


def test_compare_bound_zero_when_no_crossings():
    rep = compare_bound(_model(2, 2, 1, 57))
    assert rep.n_crossing == 0
    assert rep.bound == 0.0
    assert rep.deviation == 0.0
    assert rep.ok


def test_compare_bound_m_three():
    rep = compare_bound(_model(3, 2, 1, 58))
    assert rep.n_crossing == 1
    assert rep.bound == pytest.approx(0.5)
    assert rep.deviation <= rep.bound + REL_TOL
    assert rep.ok


def test_mc_deterministic_and_thread_invariant():
    mod = _model(2, 1, 1, 59)
    r1 = mc_expectation(mod, 6000, 7)
    r2 = mc_expectation(mod, 6000, 7)
    r3 = mc_expectation(mod, 6000, 7, threads=3)
    assert np.array_equal(r1.mean, r2.mean)
    assert np.array_equal(r1.stderr, r2.stderr)
    assert np.array_equal(r1.mean, r3.mean)
    assert np.array_equal(r1.stderr, r3.stderr)
    assert r1.samples == 6000


def test_mc_matches_exact_within_four_sigma():
    mod = _model(2, 1, 1, 59)
    res = mc_expectation(mod, 6000, 7)
    exact = exact_expectation(mod)
    z = np.abs(res.mean - exact) / np.maximum(res.stderr, 1e-300)
    assert float(np.max(z)) <= 4.0
    assert np.all(res.stderr >= 0.0)


def test_mc_input_guards():
    mod = _model(1, 1, 1, 60)
    with pytest.raises(GinibreError):
        mc_expectation(mod, 99, 0)
    with pytest.raises(GinibreError):
        mc_expectation(mod, 100, 0, threads=0)


def test_mc_seed_changes_stream():
    mod = _model(1, 1, 1, 61)
    r1 = mc_expectation(mod, 500, 1)
    r2 = mc_expectation(mod, 500, 2)
    assert not np.array_equal(r1.mean, r2.mean)
