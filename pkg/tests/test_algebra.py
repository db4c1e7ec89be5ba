import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bfcomp.algebra import (
    GramMatrix,
    InternalStateBank,
    UnitaryMatrix,
    determinant,
    equal_overlap_gram,
    gram_from_states,
    haar_unitaries,
    haar_unitary,
    khatri_rao_column,
    khatri_rao_row,
    permanent,
    permanent_batch,
    random_gram,
    states_from_gram,
)
from bfcomp.errors import DimensionError, ResourceLimitError, ValidationError
from oracles import det_brute, perm_brute


def random_complex(rng, n, m=None):
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


@pytest.mark.parametrize("n", range(0, 8))
def test_permanent_matches_brute_force(n):
    a = random_complex(np.random.default_rng(n), n)
    assert permanent(a) == pytest.approx(perm_brute(a), rel=1e-12, abs=1e-12)


def test_permanent_known_values():
    assert permanent(np.zeros((0, 0))) == 1.0
    assert permanent([[1, 2], [3, 4]]) == 10.0
    for n in range(1, 9):
        assert permanent(np.ones((n, n))).real == pytest.approx(math.factorial(n), rel=1e-13)
    # permanent of the 3x3 all-ones minus identity counts derangements
    assert permanent(np.ones((3, 3)) - np.eye(3)).real == pytest.approx(2.0)


def test_permanent_size_limit():
    with pytest.raises(ResourceLimitError):
        permanent(np.eye(25))
    with pytest.raises(DimensionError):
        permanent(np.ones((2, 3)))


def test_permanent_batch_matches_scalar():
    rng = np.random.default_rng(3)
    stack = random_complex(rng, 12, 4).reshape(3, 4, 4)
    got = permanent_batch(stack)
    np.testing.assert_allclose(got, [permanent(a) for a in stack], rtol=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_permanent_is_invariant_under_row_and_column_permutation(n, seed):
    rng = np.random.default_rng(seed)
    a = random_complex(rng, n)
    p, q = rng.permutation(n), rng.permutation(n)
    assert abs(permanent(a[p][:, q]) - permanent(a)) <= 1e-10 * max(1.0, abs(permanent(a)))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_permanent_is_multilinear_in_rows(n, seed):
    rng = np.random.default_rng(seed)
    a = random_complex(rng, n)
    row = random_complex(rng, 1, n)[0]
    b = a.copy()
    b[0] = row
    c = a.copy()
    c[0] = a[0] + 2.0 * row
    assert abs(permanent(c) - (permanent(a) + 2.0 * permanent(b))) <= 1e-9 * (1 + abs(permanent(c)))


def test_determinant_matches_brute_force():
    rng = np.random.default_rng(11)
    for n in range(0, 6):
        a = random_complex(rng, n)
        assert determinant(a) == pytest.approx(det_brute(a), rel=1e-12, abs=1e-12)


def test_khatri_rao_products():
    a = np.arange(6).reshape(2, 3)
    b = np.arange(9).reshape(3, 3) + 1
    col = khatri_rao_column(a, b)
    assert col.shape == (6, 3)
    for j in range(3):
        np.testing.assert_array_equal(col[:, j], np.kron(a[:, j], b[:, j]))
    c = np.arange(6).reshape(3, 2)
    row = khatri_rao_row(b, c)
    assert row.shape == (3, 6)
    for i in range(3):
        np.testing.assert_array_equal(row[i], np.kron(b[i], c[i]))
    with pytest.raises(DimensionError):
        khatri_rao_column(np.ones((2, 2)), np.ones((2, 3)))


def test_haar_unitary_is_unitary_and_reproducible():
    u = haar_unitary(5, seed=42)
    assert u.unitarity_residual < 1e-13
    np.testing.assert_array_equal(u.matrix, haar_unitary(5, seed=42).matrix)
    assert not np.allclose(u.matrix, haar_unitary(5, seed=43).matrix)


def test_haar_unitaries_first_moment():
    # E|U_ab|^2 = 1/m, a coarse distribution check
    us = haar_unitaries(3, 20000, seed=1)
    np.testing.assert_allclose((np.abs(us) ** 2).mean(axis=0), 1 / 3, atol=0.01)
    # the phase of the diagonal is uniform, so its mean is near zero
    assert abs(us[:, 0, 0].mean()) < 0.02


def test_unitary_validation():
    with pytest.raises(ValidationError):
        UnitaryMatrix(np.array([[1.0, 0.1], [0.0, 1.0]]))
    with pytest.raises(DimensionError):
        UnitaryMatrix(np.ones((2, 3)))
    with pytest.raises(ValidationError):
        UnitaryMatrix(np.array([[np.nan]]))
    assert UnitaryMatrix(np.eye(3)).modes == 3


def test_gram_validation():
    with pytest.raises(ValidationError):
        GramMatrix(np.array([[1.0, 0.5], [0.4, 1.0]]))
    with pytest.raises(ValidationError):
        GramMatrix(np.array([[2.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValidationError):
        GramMatrix(np.array([[1.0, 1.5], [1.5, 1.0]]))
    # rank-deficient matrices are valid
    assert GramMatrix(np.ones((3, 3))).eigen_floor == pytest.approx(0.0, abs=1e-12)


def test_gram_from_states_convention():
    phi = np.array([[1.0, 0.0], [1 / np.sqrt(2), 1j / np.sqrt(2)]])
    s = gram_from_states(InternalStateBank(phi)).matrix
    # S[0, 1] = <phi_0|phi_1> = conj(phi_0) . phi_1
    assert s[0, 1] == pytest.approx(1 / np.sqrt(2))
    assert s[1, 0] == pytest.approx(1 / np.sqrt(2))
    phi[1] = [1j / np.sqrt(2), 1 / np.sqrt(2)]
    s = gram_from_states(phi).matrix
    assert s[0, 1] == pytest.approx(1j / np.sqrt(2))


def test_state_bank_rejects_unnormalised_rows():
    with pytest.raises(ValidationError):
        InternalStateBank(np.array([[1.0, 1.0]]))


@pytest.mark.parametrize("seed", range(5))
def test_states_from_gram_roundtrip(seed):
    s = random_gram(4, seed).matrix
    back = gram_from_states(states_from_gram(s)).matrix
    np.testing.assert_allclose(back, s, atol=1e-12)


def test_equal_overlap_gram():
    g = equal_overlap_gram(3, 0.25).matrix
    np.testing.assert_allclose(g, [[1, 0.25, 0.25], [0.25, 1, 0.25], [0.25, 0.25, 1]])
    with pytest.raises(ValidationError):
        equal_overlap_gram(3, -0.6)


def test_permanent_batch_of_empty_matrices():
    np.testing.assert_array_equal(permanent_batch(np.zeros((3, 0, 0))), np.ones(3))
