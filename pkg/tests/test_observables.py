# tests/test_observables.py
import numpy as np
import pytest

from modules.errors import InvalidStateError
from modules.hilbert_core import DensityOperator, random_density, random_hermitian, random_unitary
from modules.observables import (HermitianObservable, commutes, ideal_measurement_branches, luders_channel,
                                 expectation, heisenberg, pad_observable, pointer_observable, spectral_decompose)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.diag([1.0, -1.0]).astype(complex)


def test_spectral_decompose_reconstructs_matrix():
    H = random_hermitian(4, seed=8)
    obs = spectral_decompose(H)
    np.testing.assert_allclose(obs.matrix(), H, atol=1e-12)
    assert obs.n_outcomes == 4


def test_fully_degenerate_hamiltonian_has_one_band():
    obs = spectral_decompose(2.5 * np.eye(3))
    assert obs.n_outcomes == 1
    assert obs.eigenvalues[0] == pytest.approx(2.5)
    assert obs.rank(0) == 3


def test_observable_rejects_incomplete_projections():
    P = np.diag([1.0, 0.0])
    with pytest.raises(InvalidStateError):
        HermitianObservable((0.0,), (P,))


def test_observable_rejects_shared_eigenvalue_of_reachable_outcomes():
    with pytest.raises(InvalidStateError):
        HermitianObservable.from_projections([1.0, 1.0], [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])


def test_padded_observable_keeps_matrix_and_adds_unreachable_outcome(qubit_hamiltonian):
    padded = pad_observable(qubit_hamiltonian, [2.0])
    assert padded.n_outcomes == 3
    assert padded.rank(2) == 0
    np.testing.assert_allclose(padded.matrix(), qubit_hamiltonian.matrix())


def test_pointer_observable_from_assignment():
    Z = pointer_observable([0, 1, 0], 2)
    np.testing.assert_allclose(Z.projections[0], np.diag([1.0, 0.0, 1.0]))
    assert Z.eigenvalues == (0.0, 1.0)


def test_evolution_is_unitary_exponential(qubit_hamiltonian):
    U = qubit_hamiltonian.evolution(0.7)
    np.testing.assert_allclose(U, np.diag([1.0, np.exp(-0.7j)]), atol=1e-14)


def test_luders_channel_is_idempotent_and_trace_preserving():
    obs = spectral_decompose(random_hermitian(3, seed=2, levels=[0.0, 1.0]))
    rho = random_density(3, seed=9).matrix
    once = luders_channel(obs, rho)
    np.testing.assert_allclose(luders_channel(obs, once), once, atol=1e-13)
    assert np.isclose(np.trace(once).real, 1.0)
    assert commutes(obs.matrix(), once)


def test_luders_fixed_point_for_commuting_state(qubit_hamiltonian):
    rho = np.diag([0.3, 0.7]).astype(complex)
    np.testing.assert_allclose(luders_channel(qubit_hamiltonian, rho), rho)


def test_ideal_measurement_branches_keep_zero_probability_outcomes(qubit_hamiltonian):
    rho = DensityOperator(np.diag([1.0, 0.0]))
    branches = ideal_measurement_branches(qubit_hamiltonian, rho)
    assert [b.label for b in branches] == [0, 1]
    assert branches[0].probability == pytest.approx(1.0)
    assert branches[1].probability == pytest.approx(0.0, abs=1e-15)


def test_heisenberg_picture_matches_evolved_state():
    A = random_hermitian(3, seed=11)
    V = random_unitary(3, seed=12)
    rho = random_density(3, seed=13)
    evolved = V @ rho.matrix @ V.conj().T
    evolved = DensityOperator((evolved + evolved.conj().T) / 2)
    assert expectation(heisenberg(V, A), rho) == pytest.approx(expectation(A, evolved), abs=1e-12)


def test_pauli_x_splits_into_plus_and_minus_projections():
    obs = spectral_decompose(PAULI_X)
    assert obs.eigenvalues == pytest.approx((-1.0, 1.0))
    np.testing.assert_allclose(obs.projections[0], (np.eye(2) - PAULI_X) / 2, atol=1e-14)
    np.testing.assert_allclose(obs.projections[1], (np.eye(2) + PAULI_X) / 2, atol=1e-14)


def test_luders_fixed_points_are_exactly_the_commuting_operators():
    z = spectral_decompose(PAULI_Z)
    assert not commutes(PAULI_X, PAULI_Z)
    np.testing.assert_allclose(luders_channel(z, PAULI_X), np.zeros((2, 2)), atol=1e-15)

    obs = spectral_decompose(random_hermitian(3, seed=4, levels=[0.0, 1.0, 2.0]))
    for seed in range(10):
        A = random_hermitian(3, seed=100 + seed)
        commuting = luders_channel(obs, A)
        for candidate in (A, commuting):
            is_fixed = np.allclose(luders_channel(obs, candidate), candidate, atol=1e-12)
            assert is_fixed == commutes(candidate, obs.matrix())
        assert commutes(commuting, obs.matrix())


@pytest.mark.parametrize("seed", range(10))
def test_branches_add_up_to_luders_image(seed):
    obs = spectral_decompose(random_hermitian(3, seed=seed, levels=[-1.0, 0.5, 2.0]))
    rho = random_density(3, seed=50 + seed)
    branches = ideal_measurement_branches(obs, rho)
    np.testing.assert_allclose(sum(b.state for b in branches), luders_channel(obs, rho.matrix), atol=1e-13)
    assert sum(b.probability for b in branches) == pytest.approx(1.0)


def test_plus_state_branches_evenly(qubit_hamiltonian, plus_state):
    branches = ideal_measurement_branches(qubit_hamiltonian, plus_state)
    assert [b.probability for b in branches] == pytest.approx([0.5, 0.5])
    np.testing.assert_allclose(branches[0].state, np.diag([0.5, 0.0]), atol=1e-15)
    np.testing.assert_allclose(branches[1].state, np.diag([0.0, 0.5]), atol=1e-15)


def test_padded_outcome_has_an_empty_branch(qubit_hamiltonian):
    padded = pad_observable(qubit_hamiltonian, [2.0])
    branches = ideal_measurement_branches(padded, random_density(2, seed=7))
    assert [b.label for b in branches] == [0, 1, 2]
    assert branches[2].probability == 0.0
    np.testing.assert_array_equal(branches[2].state, np.zeros((2, 2)))
