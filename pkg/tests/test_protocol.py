"""Protocol-step unit tests against exact closed-form oracles.

The two-well amplitude table and all sign conventions are pinned in
docs/CONVENTIONS.md; these tests freeze them.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latticebell import fock, protocol
from latticebell.fock import enumerate_basis
from latticebell.protocol import (
    ProtocolEngine,
    classify_event,
    final_splitter,
    first_splitter,
    one_per_site_mask,
    parity_distribution,
    phase_imprint,
    phase_imprint_diagonal,
    postselect_one_per_site,
    prepare_initial,
    run_protocol,
    shift_excited,
    two_well_event_probabilities,
)

RT2 = math.sqrt(2)

phases2 = st.tuples(
    st.floats(-math.pi, math.pi, allow_nan=False),
    st.floats(-math.pi, math.pi, allow_nan=False),
)


def test_prepare_initial_is_one_ground_atom_per_well():
    for n in (2, 3, 4):
        basis = enumerate_basis(n)
        psi = prepare_initial(basis)
        target = tuple(1 if m % 2 == 0 else 0 for m in range(2 * n))
        assert psi[basis.rank(target)] == 1.0
        assert np.sum(np.abs(psi)) == 1.0


def test_first_splitter_single_atom_rule():
    """|g> -> (|g> + |e>)/sqrt(2): the one-well ring degenerates to an
    on-site pulse, exposing the single-atom splitting rule."""
    basis = enumerate_basis(1)
    u = first_splitter(basis).matrix
    col = u[:, basis.rank((1, 0))]
    assert col[basis.rank((1, 0))] == pytest.approx(1 / RT2)
    assert col[basis.rank((0, 1))] == pytest.approx(1 / RT2)


def test_first_splitter_on_initial_two_well_state():
    basis = enumerate_basis(2)
    psi = first_splitter(basis).matrix @ prepare_initial(basis)
    expected = np.zeros(basis.dim, dtype=complex)
    for occ in [(1, 0, 1, 0), (1, 1, 0, 0), (0, 0, 1, 1), (0, 1, 0, 1)]:
        expected[basis.rank(occ)] = 0.5
    assert np.max(np.abs(psi - expected)) < 1e-12


def test_final_splitter_single_atom_rule():
    """|g> -> (|g> + |e>)/sqrt(2), |e> -> (|e> - |g>)/sqrt(2) on site."""
    basis = enumerate_basis(1)
    u = final_splitter(basis).matrix
    col_g = u[:, basis.rank((1, 0))]
    assert col_g[basis.rank((1, 0))] == pytest.approx(1 / RT2)
    assert col_g[basis.rank((0, 1))] == pytest.approx(1 / RT2)
    col_e = u[:, basis.rank((0, 1))]
    assert col_e[basis.rank((0, 1))] == pytest.approx(1 / RT2)
    assert col_e[basis.rank((1, 0))] == pytest.approx(-1 / RT2)


def test_shift_excited_permutation():
    basis = enumerate_basis(3)
    u = shift_excited(basis)
    mat = u.matrix
    # permutation: exactly one unit entry per column, unitary
    assert np.allclose(np.abs(mat).sum(axis=0), 1.0)
    assert np.max(np.abs(mat.conj().T @ mat - np.eye(basis.dim))) < 1e-12
    src = basis.rank((1, 1, 1, 0, 0, 0))
    dst = basis.rank((1, 0, 1, 1, 0, 0))
    assert mat[dst, src] == 1.0


def test_splitter_equivalence_on_ground_only_states():
    """On states with no excited occupation the cross-site splitter equals
    the excited-shift composed with the on-site pulse.  (The identity does
    not hold as full matrices; see docs/CONVENTIONS.md.)"""
    for n in (2, 3):
        basis = enumerate_basis(n)
        u_cross = first_splitter(basis).matrix
        u_composed = shift_excited(basis).matrix @ final_splitter(basis).matrix
        for j, state in enumerate(basis.states):
            if any(state[2 * l + 1] for l in range(n)):
                continue
            assert np.max(np.abs(u_cross[:, j] - u_composed[:, j])) < 1e-12


def test_phase_imprint_acts_on_ground_level_with_plus_sign():
    basis = enumerate_basis(2)
    theta = (0.4, -1.1)
    diag = phase_imprint_diagonal(basis, theta)
    for state, d in zip(basis.states, diag):
        expected = np.exp(1j * (theta[0] * state[0] + theta[1] * state[2]))
        assert abs(d - expected) < 1e-12
    op = phase_imprint(basis, theta)
    assert op.kind == "unitary"
    assert np.max(np.abs(op.matrix - np.diag(diag))) == 0.0


def test_phase_imprint_shape_validation():
    basis = enumerate_basis(2)
    with pytest.raises(ValueError):
        phase_imprint_diagonal(basis, [0.1, 0.2, 0.3])


def test_one_per_site_mask_and_postselection():
    basis = enumerate_basis(2)
    mask = one_per_site_mask(basis)
    selected = {s for s, m in zip(basis.states, mask) if m}
    assert selected == {(1, 0, 1, 0), (1, 0, 0, 1), (0, 1, 1, 0), (0, 1, 0, 1)}
    psi = first_splitter(basis).matrix @ prepare_initial(basis)
    kept, prob = postselect_one_per_site(basis, psi)
    assert prob == pytest.approx(0.5, abs=1e-12)
    assert np.sum(np.abs(kept) ** 2) == pytest.approx(1.0, abs=1e-12)
    # fully excited-paired state has zero weight on the selected sector
    dead = np.zeros(basis.dim, dtype=complex)
    dead[basis.rank((2, 0, 0, 0))] = 1.0
    with pytest.raises(ZeroDivisionError):
        postselect_one_per_site(basis, dead)


@pytest.mark.parametrize("theta", [(0.0, 0.0), (0.7, -0.3), (1.2, 2.0)])
def test_two_well_final_state_amplitude_table(theta):
    """Exact chi = 0 amplitudes from the convention ledger."""
    t1, t2 = theta
    run = run_protocol(2, theta, postselect=False)
    basis = run.basis
    total = t1 + t2
    q = np.exp(1j * total / 2) / 2
    c, s = math.cos(total / 2), math.sin(total / 2)
    expected = {
        (1, 0, 1, 0): q * c,
        (0, 1, 0, 1): q * c,
        (1, 0, 0, 1): q * 1j * s,
        (0, 1, 1, 0): q * 1j * s,
        (0, 2, 0, 0): np.exp(1j * t1) / (2 * RT2),
        (2, 0, 0, 0): -np.exp(1j * t1) / (2 * RT2),
        (0, 0, 0, 2): np.exp(1j * t2) / (2 * RT2),
        (0, 0, 2, 0): -np.exp(1j * t2) / (2 * RT2),
    }
    for state, amp in zip(basis.states, run.final_state):
        assert abs(amp - expected.get(state, 0.0)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(theta=phases2)
def test_two_well_norm_and_parity_distribution(theta):
    run = run_protocol(2, theta, postselect=False)
    assert np.sum(np.abs(run.final_state) ** 2) == pytest.approx(1.0, abs=1e-12)
    p_plus, p_minus = parity_distribution(run.basis, run.final_state)
    assert p_plus + p_minus == pytest.approx(1.0, abs=1e-12)
    # unselected correlator: 1/2 + cos(theta_1 + theta_2)/2
    assert p_plus - p_minus == pytest.approx(
        0.5 + 0.5 * math.cos(theta[0] + theta[1]), abs=1e-10
    )


@settings(max_examples=30, deadline=None)
@given(theta=phases2)
def test_postselected_correlator_is_cosine(theta):
    engine = protocol.get_engine(2)
    value = engine.parity_expectation(theta, postselect=True)
    assert value == pytest.approx(math.cos(theta[0] + theta[1]), abs=1e-10)


def test_selection_norms_agree_at_zero_chi():
    engine = protocol.get_engine(2)
    for theta in [(0.3, 0.4), (1.0, -2.0)]:
        a = engine.parity_expectation(theta, postselect=True, selection_norm="renormalized")
        b = engine.parity_expectation(theta, postselect=True, selection_norm="fixed")
        assert a == pytest.approx(b, abs=1e-12)
    with pytest.raises(ValueError):
        engine.parity_expectation((0.0, 0.0), postselect=True, selection_norm="bogus")


def test_sparse_engine_matches_dense_engine():
    dense = ProtocolEngine(3, chi=0.2)
    sparse = ProtocolEngine(3, chi=0.2, dense_limit=1)
    assert dense.dense and not sparse.dense
    for theta in [(0.0, 0.0, 0.0), (0.5, -0.2, 1.1)]:
        for postselect in (False, True):
            a = dense.parity_expectation(theta, postselect=postselect)
            b = sparse.parity_expectation(theta, postselect=postselect)
            assert a == pytest.approx(b, abs=1e-9)


def test_classify_event_labels():
    assert classify_event((1, 0, 0, 1)) == ("G", "E")
    assert classify_event((2, 0, 0, 0)) == ("G2", "0")
    assert classify_event((0, 0, 1, 1)) == ("0", "GE")
    assert classify_event((0, 2, 0, 2)) == ("E2", "E2")


def test_two_well_event_probabilities_table():
    t1, t2 = 0.7, -0.3
    c2 = math.cos((t1 + t2) / 2) ** 2
    s2 = math.sin((t1 + t2) / 2) ** 2
    probs = two_well_event_probabilities(t1, t2)
    assert probs[("G", "G")] == pytest.approx(c2 / 4, abs=1e-12)
    assert probs[("E", "E")] == pytest.approx(c2 / 4, abs=1e-12)
    assert probs[("G", "E")] == pytest.approx(s2 / 4, abs=1e-12)
    assert probs[("E", "G")] == pytest.approx(s2 / 4, abs=1e-12)
    for event in [("G2", "0"), ("E2", "0"), ("0", "G2"), ("0", "E2")]:
        assert probs[event] == pytest.approx(0.125, abs=1e-12)
    assert sum(probs.values()) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_postselection_probability_scaling(n):
    run = run_protocol(n, [0.0] * n, postselect=True)
    assert run.postselect_probability == pytest.approx(0.5 ** (n - 1), abs=1e-12)


def test_run_protocol_metadata():
    run = run_protocol(2, (0.1, 0.2), chi=0.0, postselect=True)
    assert run.n_wells == 2
    assert run.phases == (0.1, 0.2)
    assert run.chi == 0.0
    assert run.postselected is True
    assert fock.basis_dimension(2) == run.basis.dim
