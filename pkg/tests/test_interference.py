import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bfcomp.algebra import determinant, haar_unitaries, haar_unitary, permanent, random_gram
from bfcomp.errors import DimensionError, PauliViolationError, ResourceLimitError
from bfcomp.interference import (
    Species,
    WTensor,
    build_w_tensor,
    compositions,
    conserves_particle_number,
    dominated,
    effective_scattering_matrix,
    expand,
    full_distribution,
    tensor_determinant_compact,
    tensor_determinant_def,
    tensor_permanent_compact,
    tensor_permanent_def,
    transition_probability,
    transition_probability_batch,
)
from oracles import distinguishable_output, fock_output, tensor_brute

BS = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def test_occupation_helpers():
    assert expand((2, 0, 1)) == [0, 0, 2]
    assert list(compositions(2, 2)) == [(0, 2), (1, 1), (2, 0)]
    assert len(list(compositions(3, 4))) == 20
    assert list(dominated((1, 2))) == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]
    assert conserves_particle_number((1, 1, 0), (0, 0, 2))
    assert not conserves_particle_number((1, 1, 0), (0, 0, 1))


def test_effective_scattering_matrix_uses_input_rows():
    u = haar_unitary(3, 0).matrix
    sub = effective_scattering_matrix(u, (2, 0, 1), (0, 1, 2))
    np.testing.assert_array_equal(sub, u[[0, 0, 2]][:, [1, 2, 2]])


@pytest.mark.parametrize("k", [(1, 1, 0), (1, 1, 1), (2, 1, 0), (3, 0, 0), (1, 0, 1)])
@pytest.mark.parametrize("seed", [0, 1])
def test_boson_probabilities_match_fock_evolution(k, seed):
    u = haar_unitary(3, seed).matrix
    s = random_gram(3, seed + 10).matrix
    ref = fock_output(u, s, k, "boson")
    for out in compositions(sum(k), 3):
        assert transition_probability(u, s, k, out, "boson") == pytest.approx(ref.get(out, 0.0), abs=1e-13)


@pytest.mark.parametrize("k", [(1, 1, 0), (1, 1, 1), (0, 1, 1)])
@pytest.mark.parametrize("seed", [0, 1])
def test_fermion_probabilities_match_fock_evolution(k, seed):
    u = haar_unitary(3, seed).matrix
    s = random_gram(3, seed + 20).matrix
    ref = fock_output(u, s, k, "fermion")
    for out in compositions(sum(k), 3):
        assert transition_probability(u, s, k, out, "fermion") == pytest.approx(ref.get(out, 0.0), abs=1e-13)


def test_classical_binary_input_matches_independent_particles():
    u = haar_unitary(3, 5).matrix
    k = (1, 1, 1)
    ref = distinguishable_output(u, k)
    for out in compositions(3, 3):
        assert transition_probability(u, None, k, out, "classical") == pytest.approx(ref.get(out, 0.0), abs=1e-14)


def test_classical_repeated_input_carries_inverse_input_factorial():
    # the distinguishable law, divided by k! = 2
    u = haar_unitary(2, 6).matrix
    ref = distinguishable_output(u, (2, 0))
    for out in compositions(2, 2):
        assert transition_probability(u, None, (2, 0), out, "classical") == pytest.approx(ref[out] / 2, abs=1e-14)
    assert full_distribution(u, np.eye(2), (2, 0), "classical").total() == pytest.approx(0.5)


def test_hom_values():
    for x in np.linspace(0, 1, 5):
        s = np.array([[1, x], [x, 1]])
        assert transition_probability(BS, s, (1, 1), (1, 1), "boson") == pytest.approx((1 - x**2) / 2, abs=1e-15)
        assert transition_probability(BS, s, (1, 1), (1, 1), "fermion") == pytest.approx((1 + x**2) / 2, abs=1e-15)
        assert transition_probability(BS, s, (1, 1), (2, 0), "boson") == pytest.approx((1 + x**2) / 4, abs=1e-15)
        assert transition_probability(BS, s, (1, 1), (2, 0), "fermion") == pytest.approx((1 - x**2) / 4, abs=1e-15)


def test_conservation_and_pauli():
    u = haar_unitary(2, 0).matrix
    assert transition_probability(u, np.eye(2), (1, 1), (1, 0), "boson") == 0.0
    with pytest.raises(PauliViolationError):
        transition_probability(u, np.eye(2), (2, 0), (1, 1), "fermion")
    with pytest.raises(DimensionError):
        transition_probability(u, np.eye(2), (1, 1, 0), (1, 1, 0), "boson")
    assert transition_probability(u, np.eye(2), (0, 0), (0, 0), Species.FERMION) == 1.0


@pytest.mark.parametrize("n", range(1, 6))
def test_tensor_sums_agree_with_brute_force(n):
    rng = np.random.default_rng(n)
    w = rng.standard_normal((n, n, n)) + 1j * rng.standard_normal((n, n, n))
    if n <= 4:
        assert tensor_permanent_def(w) == pytest.approx(tensor_brute(w, False), rel=1e-12)
        assert tensor_determinant_def(w) == pytest.approx(tensor_brute(w, True), rel=1e-12)
    assert tensor_permanent_compact(w) == pytest.approx(tensor_permanent_def(w), rel=1e-12)
    assert tensor_determinant_compact(w) == pytest.approx(tensor_determinant_def(w), rel=1e-12)


def test_tensor_size_limits():
    with pytest.raises(ResourceLimitError):
        tensor_permanent_def(np.zeros((7, 7, 7)))
    with pytest.raises(DimensionError):
        WTensor.from_array(np.zeros((2, 3, 2)))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**31 - 1))
def test_w_tensor_limits(m, seed):
    u = haar_unitary(m, seed).matrix
    rng = np.random.default_rng(seed)
    k = tuple(int(v) for v in rng.integers(0, 2, m))
    if not any(k):
        k = (1,) + k[1:]
    outs = list(compositions(sum(k), m))
    i = outs[rng.integers(len(outs))]
    usub = effective_scattering_matrix(u, k, i)
    w_id = build_w_tensor(u, np.eye(m), k, i)
    assert tensor_permanent_compact(w_id) == pytest.approx(permanent(np.abs(usub) ** 2), abs=1e-12)
    w_one = build_w_tensor(u, np.ones((m, m)), k, i)
    assert tensor_permanent_compact(w_one) == pytest.approx(abs(permanent(usub)) ** 2, abs=1e-12)
    assert tensor_determinant_compact(w_one) == pytest.approx(abs(determinant(usub)) ** 2, abs=1e-12)


@pytest.mark.parametrize("k", [(1, 1, 1), (2, 1, 0), (1, 0, 1)])
def test_distributions_normalised_and_coincide_for_distinguishable_particles(k):
    u = haar_unitary(3, 9).matrix
    s = random_gram(3, 9).matrix
    for sp in ("boson", "classical") + (("fermion",) if max(k) <= 1 else ()):
        dist = full_distribution(u, s, k, sp)
        weight = 0.5 if sp == "classical" and max(k) > 1 else 1.0
        assert dist.total() == pytest.approx(weight, abs=1e-12)
    if max(k) <= 1:
        b = full_distribution(u, np.eye(3), k, "boson")
        f = full_distribution(u, np.eye(3), k, "fermion")
        c = full_distribution(u, np.eye(3), k, "classical")
        for out in b.probabilities:
            assert b[out] == pytest.approx(c[out], abs=1e-13)
            assert f[out] == pytest.approx(c[out], abs=1e-13)


def test_full_distribution_resource_limit():
    with pytest.raises(ResourceLimitError):
        full_distribution(np.eye(2), np.eye(2), (4, 3), "boson")


@pytest.mark.parametrize("species", list(Species))
def test_batch_matches_scalar(species):
    us = haar_unitaries(3, 6, seed=4)
    s = random_gram(3, 4).matrix
    for k, i in [((1, 1, 0), (0, 1, 1)), ((1, 1, 1), (2, 1, 0))]:
        got = transition_probability_batch(us, s, k, i, species)
        want = [transition_probability(u, s, k, i, species) for u in us]
        np.testing.assert_allclose(got, want, atol=1e-14)


def test_boson_bunching_exceeds_distinguishable_for_identical_particles():
    # full bunching into one mode is enhanced by n! for indistinguishable bosons
    u = haar_unitary(3, 2).matrix
    for out in [(3, 0, 0), (0, 3, 0)]:
        b = transition_probability(u, np.ones((3, 3)), (1, 1, 1), out, "boson")
        c = transition_probability(u, np.eye(3), (1, 1, 1), out, "classical")
        assert b == pytest.approx(6 * c, rel=1e-12)


def test_species_parse():
    assert Species.parse("Boson") is Species.BOSON
    assert Species.parse(Species.FERMION) is Species.FERMION
    with pytest.raises(ValueError):
        Species.parse("anyon")


def test_probabilities_are_phase_invariant():
    # rephasing inputs and outputs leaves every probability unchanged
    u = haar_unitary(3, 12).matrix
    s = random_gram(3, 12).matrix
    d1 = np.diag(np.exp(1j * np.array([0.3, -1.1, 2.0])))
    d2 = np.diag(np.exp(1j * np.array([1.7, 0.2, -0.4])))
    v = d1 @ u @ d2
    for k, i in itertools.product([(1, 1, 0), (1, 1, 1)], [(0, 1, 1), (1, 1, 0), (1, 1, 1), (2, 0, 0)]):
        if sum(k) != sum(i):
            continue
        for sp in ("boson", "fermion"):
            assert transition_probability(u, s, k, i, sp) == pytest.approx(transition_probability(v, s, k, i, sp), abs=1e-13)


def test_batch_vacuum():
    us = haar_unitaries(2, 3, seed=0)
    for sp in Species:
        np.testing.assert_array_equal(transition_probability_batch(us, np.eye(2), (0, 0), (0, 0), sp), np.ones(3))
