# modules/tpm_extended.py
"""
Two-point measurement on system + two probes.

The first measurement is made indirectly through probe 0 (coupling U0 at t0),
the system then evolves under V, and the second measurement is made through
probe 1 (coupling U1 at t1). Energies are measured on the full tripartite
space H (x) H_A0 (x) H_A1 before and after, so every run records

    X = ((m, mu, nu), (n, mu2, nu2))

with m, n system bands and mu, nu, mu2, nu2 probe-energy bands, and total work
W(X) = (eps_n + lambda0_mu2 + lambda1_nu2) - (eps_m + lambda0_mu + lambda1_nu).
"""
import logging
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

import defaults
from modules.errors import DimensionMismatchError, SchemeError
from modules.hilbert_core import (ComplexMatrix, CompositeSpace, DensityOperator, PureState, as_matrix, dagger,
                                  embed, real_expectation, require_unitary, tensor_product)
from modules.measurement_scheme import (NormalMeasurementScheme, check_scheme_matches, measurement_work,
                                        pointer_states)
from modules.observables import HermitianObservable, luders_channel, spectral_decompose
from modules.tpm_system import (JOINT_COLUMNS, average_work_closed_form, tpm_joint, validate_probability_table,
                                work_distribution)

logger = logging.getLogger(__name__)

EXTENDED_COLUMNS = ['m', 'mu', 'nu', 'n', 'mu2', 'nu2', 'W', 'p']


@dataclass(frozen=True)
class ExtendedScenario:
    hamiltonian: HermitianObservable
    process: np.ndarray
    scheme0: NormalMeasurementScheme
    scheme1: NormalMeasurementScheme
    theta0: float = 0.0
    theta1: float = 0.0

    def __post_init__(self):
        V = require_unitary(self.process, "process unitary")
        if V.shape[0] != self.hamiltonian.dim:
            raise DimensionMismatchError(
                f"process unitary has dimension {V.shape[0]}, Hamiltonian {self.hamiltonian.dim}")
        for j, scheme in enumerate((self.scheme0, self.scheme1)):
            check_scheme_matches(scheme, self.hamiltonian)
            if scheme.probe_hamiltonian is None:
                raise SchemeError(f"probe {j} has no probe Hamiltonian")
        V = V.copy()
        V.setflags(write=False)
        object.__setattr__(self, 'process', V)
        object.__setattr__(self, 'theta0', float(self.theta0))
        object.__setattr__(self, 'theta1', float(self.theta1))

    @property
    def space(self) -> CompositeSpace:
        return CompositeSpace((self.hamiltonian.dim, self.scheme0.apparatus_dim, self.scheme1.apparatus_dim))

    @property
    def probe_hamiltonians(self) -> Tuple[HermitianObservable, HermitianObservable]:
        return self.scheme0.probe_hamiltonian, self.scheme1.probe_hamiltonian

    @property
    def xi_eigenstates(self) -> bool:
        return self.scheme0.xi_energy is not None and self.scheme1.xi_energy is not None

    def initial_state(self, rho: DensityOperator) -> ComplexMatrix:
        """rho (x) |xi0><xi0| (x) |xi1><xi1|"""
        if rho.dim != self.hamiltonian.dim:
            raise DimensionMismatchError(f"state has dimension {rho.dim}, system {self.hamiltonian.dim}")
        return tensor_product(rho.matrix, self.scheme0.xi.projector(), self.scheme1.xi.projector())


@dataclass(frozen=True)
class ExtendedOutcomeTable:
    """
    One row per outcome sequence X, zero-probability rows included.
    `frame` carries EXTENDED_COLUMNS plus the system work `w` of the pair (m, n).
    `eigenstate_probes` is False when a probe state was not an energy eigenstate
    and the first measurement had to branch the probes as well.
    """
    frame: pd.DataFrame
    eigenstate_probes: bool


def total_hamiltonian_matrix(scn: ExtendedScenario) -> ComplexMatrix:
    H_A0, H_A1 = scn.probe_hamiltonians
    space = scn.space
    return (embed(scn.hamiltonian.matrix(), space, 0)
            + embed(H_A0.matrix(), space, 1)
            + embed(H_A1.matrix(), space, 2))


def total_hamiltonian(scn: ExtendedScenario, degeneracy_tol: float = defaults.DEGENERACY_TOL) -> HermitianObservable:
    """H_tot = H + H_A0 + H_A1 in spectral form."""
    return spectral_decompose(total_hamiltonian_matrix(scn), degeneracy_tol)


def total_unitary(scn: ExtendedScenario) -> ComplexMatrix:
    """V_tot = exp(-i theta0 H_A0) U1 V U0 exp(-i theta1 H_A1), each factor embedded on the tripartite space."""
    H_A0, H_A1 = scn.probe_hamiltonians
    space = scn.space
    free0 = embed(H_A0.evolution(scn.theta0), space, 1)
    free1 = embed(H_A1.evolution(scn.theta1), space, 2)
    U0 = embed(scn.scheme0.coupling, space, (0, 1))
    U1 = embed(scn.scheme1.coupling, space, (0, 2))
    V = embed(scn.process, space, 0)
    return free0 @ U1 @ V @ U0 @ free1


def total_unmeasured_work(scn: ExtendedScenario, rho: DensityOperator) -> float:
    """W_tot = tr[(V_tot^dagger H_tot V_tot - H_tot) rho (x) xi0 (x) xi1]"""
    H_tot = total_hamiltonian_matrix(scn)
    V_tot = total_unitary(scn)
    delta = dagger(V_tot) @ H_tot @ V_tot - H_tot
    return real_expectation(np.trace(delta @ scn.initial_state(rho)), "total unmeasured work")


def total_work_decomposition(scn: ExtendedScenario, rho: DensityOperator) -> Dict[str, float]:
    """
    W_tot split by stage: the first coupling's W_meas on rho, the system's
    average work under the Lüders-dephased state, and the second coupling's
    W_meas on V L(rho) V^dagger (probe 1 taken after its free evolution).
    """
    H, V = scn.hamiltonian, scn.process
    H_A1 = scn.scheme1.probe_hamiltonian
    xi1 = PureState.normalized(H_A1.evolution(scn.theta1) @ scn.scheme1.xi.amplitudes)
    dephased = luders_channel(H, rho.matrix)
    after_process = DensityOperator(V @ dephased @ dagger(V))
    parts = {
        'measurement0': measurement_work(scn.scheme0, H, rho),
        'system': average_work_closed_form(H, V, rho),
        'measurement1': measurement_work(scn.scheme1.with_xi(xi1), H, after_process),
    }
    parts['total'] = parts['measurement0'] + parts['system'] + parts['measurement1']
    return parts


def _band_overlaps(states: List[np.ndarray], bands: HermitianObservable) -> np.ndarray:
    """q[m, mu] = <phi_m|Q_mu|phi_m>, each row normalized to sum 1 (zero rows stay zero)."""
    q = np.array([[real_expectation(np.vdot(phi, Q @ phi), "band overlap") for Q in bands.projections]
                  for phi in states])
    totals = q.sum(axis=1, keepdims=True)
    return np.divide(q, totals, out=np.zeros_like(q), where=totals > 0)


def _factorized_rows(scn: ExtendedScenario, rho: DensityOperator) -> List[dict]:
    """p(X) = p(m, n) <phi_m|Q_mu2|phi_m> <phi_n|Q_nu2|phi_n> on the lambda0 bands, zero elsewhere."""
    H = scn.hamiltonian
    H_A0, H_A1 = scn.probe_hamiltonians
    start0 = H_A0.band_of(scn.scheme0.require_xi_energy())
    start1 = H_A1.band_of(scn.scheme1.require_xi_energy())
    q0 = _band_overlaps(pointer_states(scn.scheme0, H), H_A0)
    q1 = _band_overlaps(pointer_states(scn.scheme1, H), H_A1)
    joint = tpm_joint(H, scn.process, rho)

    rows = []
    for row in joint.itertuples(index=False):
        m, n = int(row.m), int(row.n)
        for mu, nu, mu2, nu2 in product(H_A0.labels, H_A1.labels, H_A0.labels, H_A1.labels):
            starts = 1.0 if (mu == start0 and nu == start1) else 0.0
            rows.append({'m': m, 'mu': mu, 'nu': nu, 'n': n, 'mu2': mu2, 'nu2': nu2, 'w': row.w,
                         'p': row.p * starts * q0[m, mu2] * q1[n, nu2]})
    return rows


def _triple_projections(scn: ExtendedScenario) -> Dict[Tuple[int, int, int], ComplexMatrix]:
    H = scn.hamiltonian
    H_A0, H_A1 = scn.probe_hamiltonians
    return {(m, mu, nu): tensor_product(P, Q0, Q1)
            for (m, P), (mu, Q0), (nu, Q1) in product(enumerate(H.projections), enumerate(H_A0.projections),
                                                      enumerate(H_A1.projections))}


def _sandwich_rows(scn: ExtendedScenario, rho: DensityOperator) -> List[dict]:
    """Both ideal measurements applied to the full tripartite state, probes branched at the start too."""
    H = scn.hamiltonian
    V_tot = total_unitary(scn)
    sigma = scn.initial_state(rho)
    projections = _triple_projections(scn)
    rows = []
    for first, Pi1 in projections.items():
        evolved = V_tot @ (Pi1 @ sigma @ Pi1) @ dagger(V_tot)
        for second, Pi2 in projections.items():
            p = real_expectation(np.sum(Pi2 * evolved.T), "outcome probability")
            m, mu, nu = first
            n, mu2, nu2 = second
            rows.append({'m': m, 'mu': mu, 'nu': nu, 'n': n, 'mu2': mu2, 'nu2': nu2,
                         'w': H.eigenvalues[n] - H.eigenvalues[m], 'p': p})
    return rows


def _attach_total_work(scn: ExtendedScenario, frame: pd.DataFrame) -> pd.DataFrame:
    lambda0 = np.asarray(scn.scheme0.probe_hamiltonian.eigenvalues)
    lambda1 = np.asarray(scn.scheme1.probe_hamiltonian.eigenvalues)
    frame['W'] = (frame['w']
                  + (lambda0[frame['mu2'].to_numpy()] - lambda0[frame['mu'].to_numpy()])
                  + (lambda1[frame['nu2'].to_numpy()] - lambda1[frame['nu'].to_numpy()]))
    return frame[['m', 'mu', 'nu', 'n', 'mu2', 'nu2', 'w', 'W', 'p']]


def extended_tpm(scn: ExtendedScenario, rho: DensityOperator) -> ExtendedOutcomeTable:
    conformant = scn.xi_eigenstates
    if conformant:
        rows = _factorized_rows(scn, rho)
    else:
        logger.warning("-> probe state is not an energy eigenstate; probes are branched by the first measurement")
        rows = _sandwich_rows(scn, rho)
    frame = _attach_total_work(scn, pd.DataFrame(rows))
    validate_probability_table(frame, "extended outcome table")
    logger.debug(f"-> extended table with {len(frame)} outcome sequences (conformant={conformant})")
    return ExtendedOutcomeTable(frame, conformant)


def marginal_system(table: ExtendedOutcomeTable) -> pd.DataFrame:
    """Sums p(X) over probe outcomes for every system pair (m, n)."""
    frame = table.frame if isinstance(table, ExtendedOutcomeTable) else table
    marginal = (frame.groupby(['m', 'n'], sort=True)
                .agg(w=('w', 'first'), p=('p', 'sum'))
                .reset_index())
    return marginal[JOINT_COLUMNS]


def total_work_distribution(table: ExtendedOutcomeTable, bin_tol: float = defaults.BIN_TOL) -> pd.DataFrame:
    return work_distribution(table.frame, bin_tol, value_column='W')


def average_total_work(table: ExtendedOutcomeTable) -> float:
    frame = table.frame
    return float((frame['W'] * frame['p']).sum())


def average_total_work_closed_form(scn: ExtendedScenario, rho: DensityOperator) -> float:
    """tr[(V_tot^dagger H_tot V_tot - H_tot) L(rho) (x) xi0 (x) xi1] with L the Lüders channel of H."""
    H_tot = total_hamiltonian_matrix(scn)
    V_tot = total_unitary(scn)
    dephased = DensityOperator(luders_channel(scn.hamiltonian, rho.matrix))
    delta = dagger(V_tot) @ H_tot @ V_tot - H_tot
    return real_expectation(np.trace(delta @ scn.initial_state(dephased)), "average total work")


def _pointer_pair(scn: ExtendedScenario, x: Tuple[int, int]) -> ComplexMatrix:
    """1 (x) Z0_m (x) Z1_n for the pointer pair x = (m, n)."""
    m, n = x
    if not (0 <= m < scn.scheme0.n_outcomes and 0 <= n < scn.scheme1.n_outcomes):
        raise DimensionMismatchError(f"pointer outcome pair {x} out of range")
    return tensor_product(np.eye(scn.hamiltonian.dim), scn.scheme0.pointer.projections[m],
                          scn.scheme1.pointer.projections[n])


def instrument_operation(scn: ExtendedScenario, x_prime: Tuple[int, int], x: Tuple[int, int], T) -> ComplexMatrix:
    """J_{x',x}(T) = Z_x V_tot Z_{x'} T Z_{x'} V_tot^dagger Z_x with Z_x = 1 (x) Z0_m (x) Z1_n."""
    T = as_matrix(T)
    scn.space.check_operator(T, "tripartite operator")
    V_tot = total_unitary(scn)
    before = _pointer_pair(scn, x_prime)
    after = _pointer_pair(scn, x)
    return after @ V_tot @ before @ T @ before @ dagger(V_tot) @ after
