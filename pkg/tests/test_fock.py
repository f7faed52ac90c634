"""Basis enumeration, operator construction and matrix-exponential unit tests."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latticebell import fock
from latticebell.fock import (
    CapacityError,
    Level,
    ModeIndex,
    OperatorMatrix,
    basis_dimension,
    cross_site_jy,
    enumerate_basis,
    exp_unitary,
    jz_diagonal,
    number_operator,
    onsite_jy,
    parity_diagonal,
    quadratic_operator,
)


@pytest.mark.parametrize("n,expected", [(1, 2), (2, 10), (3, 56), (4, 330), (5, 2002), (6, 12376)])
def test_basis_dimension(n, expected):
    assert basis_dimension(n) == expected


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_enumerate_basis_counts_and_order(n):
    basis = enumerate_basis(n)
    assert basis.dim == basis_dimension(n)
    assert basis.n_modes == 2 * n
    # every state holds exactly n particles
    assert all(sum(s) == n for s in basis.states)
    # lexicographic descending, no duplicates
    assert list(basis.states) == sorted(set(basis.states), reverse=True)


def test_rank_unrank_roundtrip():
    basis = enumerate_basis(3)
    for i, state in enumerate(basis.states):
        assert basis.rank(state) == i
        assert basis.unrank(i) == state
        assert state in basis
    assert (9, 9, 9, 9, 9, 9) not in basis


def test_capacity_errors():
    with pytest.raises(CapacityError):
        enumerate_basis(0)
    with pytest.raises(CapacityError):
        enumerate_basis(5, dimension_cap=100)


def test_mode_index_flat():
    assert ModeIndex(0, Level.GROUND).flat == 0
    assert ModeIndex(0, Level.EXCITED).flat == 1
    assert ModeIndex(3, Level.GROUND).flat == 6
    assert ModeIndex(3, Level.EXCITED).flat == 7


def test_number_operator_matches_occupations():
    basis = enumerate_basis(2)
    for well in range(2):
        for level in (Level.GROUND, Level.EXCITED):
            op = number_operator(basis, ModeIndex(well, level))
            diag = np.diag(op.matrix).real
            expected = basis.occupations[:, 2 * well + int(level)]
            assert np.array_equal(diag, expected)


def test_quadratic_operator_hopping_amplitudes():
    """c†_1 c_0 carries sqrt(n_0) * sqrt(n_1 + 1) bosonic factors."""
    basis = enumerate_basis(2)
    mat = quadratic_operator(basis, [(1, 0, 1.0)])
    src = basis.rank((2, 0, 0, 0))
    dst = basis.rank((1, 1, 0, 0))
    assert mat[dst, src] == pytest.approx(math.sqrt(2))
    src2 = basis.rank((1, 1, 0, 0))
    dst2 = basis.rank((0, 2, 0, 0))
    assert mat[dst2, src2] == pytest.approx(math.sqrt(2))
    # annihilating an empty mode gives no element
    assert np.all(mat[:, basis.rank((0, 2, 0, 0))] == 0)


def test_quadratic_operator_adjoint_pairing():
    basis = enumerate_basis(2)
    hop = quadratic_operator(basis, [(1, 0, 1.0)])
    hop_dag = quadratic_operator(basis, [(0, 1, 1.0)])
    assert np.allclose(hop.conj().T, hop_dag)


@pytest.mark.parametrize("builder", [cross_site_jy, onsite_jy])
@pytest.mark.parametrize("n", [2, 3])
def test_jy_hermitian_and_sparse_consistency(builder, n):
    basis = enumerate_basis(n)
    dense = builder(basis)
    assert dense.kind == "hermitian"
    assert np.max(np.abs(dense.matrix - dense.matrix.conj().T)) < fock.ALGEBRA_TOL
    sparse = builder(basis, as_sparse=True)
    assert np.allclose(sparse.toarray(), dense.matrix)


def test_jz_and_parity_diagonals():
    basis = enumerate_basis(2)
    jz = jz_diagonal(basis)
    parity = parity_diagonal(basis)
    for state, z, p in zip(basis.states, jz, parity):
        n_g = state[0] + state[2]
        n_e = state[1] + state[3]
        assert z == pytest.approx(0.5 * (n_g - n_e))
        assert p == (1.0 if n_g % 2 == 0 else -1.0)
    assert set(np.unique(parity)) <= {-1.0, 1.0}


@pytest.mark.parametrize("n", [2, 3])
def test_exp_unitary_is_unitary(n):
    basis = enumerate_basis(n)
    u = exp_unitary(cross_site_jy(basis), math.pi / 2)
    assert u.kind == "unitary"
    eye = np.eye(basis.dim)
    assert np.max(np.abs(u.matrix.conj().T @ u.matrix - eye)) < 1e-12


def test_exp_unitary_diagonal_shortcut_matches_eigh():
    basis = enumerate_basis(2)
    diag_op = fock.jz_half_difference(basis)
    via_diag = exp_unitary(diag_op, 0.37).matrix
    dense_op = OperatorMatrix(basis, diag_op.matrix, "hermitian")
    via_eigh = exp_unitary(dense_op, 0.37).matrix
    assert np.max(np.abs(via_diag - via_eigh)) < 1e-12


def test_exp_unitary_rejects_non_hermitian():
    basis = enumerate_basis(2)
    bad = np.zeros((basis.dim, basis.dim), dtype=complex)
    bad[0, 1] = 1.0
    with pytest.raises(ValueError):
        exp_unitary(OperatorMatrix(basis, bad, "hermitian"), 1.0)
    with pytest.raises(ValueError):
        exp_unitary(OperatorMatrix(basis, bad, "unitary"), 1.0)


def test_operator_matrix_kind_validation():
    basis = enumerate_basis(2)
    with pytest.raises(ValueError):
        OperatorMatrix(basis, np.eye(basis.dim), "bogus")


@settings(max_examples=25, deadline=None)
@given(scale=st.floats(-10, 10, allow_nan=False))
def test_exp_unitary_group_property(scale):
    """exp(-i s G) exp(+i s G) = 1 for every scale."""
    basis = enumerate_basis(2)
    g = onsite_jy(basis)
    forward = exp_unitary(g, scale).matrix
    backward = exp_unitary(g, -scale).matrix
    assert np.max(np.abs(forward @ backward - np.eye(basis.dim))) < 1e-12
