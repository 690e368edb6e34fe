# modules/oracle.py
"""
Brute-force enumerator for the extended protocol.

Shares no code path with modules/tpm_extended.py beyond the scenario object:
V_tot is assembled from explicit Kronecker products and a permutation matrix
in the ordering U1 (V (x) exp(-i theta0 H_A0) (x) exp(-i theta1 H_A1)) U0,
free evolutions come from scipy's expm, and every outcome sequence is
evaluated as a projector sandwich without the factorized formula.
"""
import numpy as np
import pandas as pd
from scipy import linalg

from modules.tpm_extended import ExtendedScenario


def _swap_last_two(d: int, a: int, b: int) -> np.ndarray:
    """Permutation taking |s, x, y> on (d, a, b) to |s, y, x> on (d, b, a)."""
    P = np.zeros((d * a * b, d * a * b))
    for s in range(d):
        for x in range(a):
            for y in range(b):
                P[(s * b + y) * a + x, (s * a + x) * b + y] = 1.0
    return P


def brute_force_total_unitary(scn: ExtendedScenario) -> np.ndarray:
    d = scn.hamiltonian.dim
    a, b = scn.scheme0.apparatus_dim, scn.scheme1.apparatus_dim
    H_A0 = scn.scheme0.probe_hamiltonian.matrix()
    H_A1 = scn.scheme1.probe_hamiltonian.matrix()

    U0 = np.kron(scn.scheme0.coupling, np.eye(b))
    swap = _swap_last_two(d, a, b)
    # U1 lives on (system, probe1); conjugate it into (system, probe0, probe1)
    U1 = swap.T @ np.kron(scn.scheme1.coupling, np.eye(a)) @ swap
    middle = np.kron(np.kron(scn.process, linalg.expm(-1j * scn.theta0 * H_A0)),
                     linalg.expm(-1j * scn.theta1 * H_A1))
    return U1 @ middle @ U0


def brute_force_outcomes(scn: ExtendedScenario, rho) -> pd.DataFrame:
    """Every X = ((m, mu, nu), (n, mu2, nu2)) with p(X) = tr[Pi2 V_tot Pi1 sigma Pi1 V_tot^dagger Pi2]."""
    H = scn.hamiltonian
    H_A0 = scn.scheme0.probe_hamiltonian
    H_A1 = scn.scheme1.probe_hamiltonian
    xi0 = scn.scheme0.xi.amplitudes
    xi1 = scn.scheme1.xi.amplitudes
    sigma = np.kron(np.kron(rho.matrix, np.outer(xi0, xi0.conj())), np.outer(xi1, xi1.conj()))
    V_tot = brute_force_total_unitary(scn)

    triples = []
    for m, P in enumerate(H.projections):
        for mu, Q0 in enumerate(H_A0.projections):
            for nu, Q1 in enumerate(H_A1.projections):
                energy = H.eigenvalues[m] + H_A0.eigenvalues[mu] + H_A1.eigenvalues[nu]
                triples.append(((m, mu, nu), energy, np.kron(np.kron(P, Q0), Q1)))

    rows = []
    for (m, mu, nu), e_before, Pi1 in triples:
        branch = V_tot @ Pi1 @ sigma @ Pi1 @ V_tot.conj().T
        for (n, mu2, nu2), e_after, Pi2 in triples:
            p = np.trace(Pi2 @ branch @ Pi2).real
            rows.append({'m': m, 'mu': mu, 'nu': nu, 'n': n, 'mu2': mu2, 'nu2': nu2,
                         'W': e_after - e_before, 'p': p})
    return pd.DataFrame(rows)
