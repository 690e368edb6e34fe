# modules/measurement_scheme.py
"""
Normal measurement schemes: a probe prepared in |xi>, a coupling unitary U on
system (x) probe, a pointer observable Z read out on the probe, and optionally
a probe Hamiltonian H_A. A scheme realizes the ideal measurement of an
observable when

    tr_A[(1 (x) Z_m) U (T (x) |xi><xi|) U^dagger] = P_m T P_m   for all T, m,

equivalently U(|psi> (x) |xi>) = sum_m P_m |psi> (x) |phi_m> with Z_n |phi_m> = delta_mn |phi_m>.
"""
import logging
from dataclasses import dataclass, replace
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np

import defaults
from modules.errors import DimensionMismatchError, SchemeError
from modules.hilbert_core import (ComplexMatrix, CompositeSpace, DensityOperator, PureState, as_matrix, dagger,
                                  embed, max_norm, partial_trace, real_expectation, require_unitary, tensor_product)
from modules.observables import HermitianObservable, pointer_observable, spectral_decompose

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NormalMeasurementScheme:
    system_dim: int
    xi: PureState
    coupling: np.ndarray
    pointer: HermitianObservable
    probe_hamiltonian: Optional[HermitianObservable] = None

    def __post_init__(self):
        d_A = self.xi.dim
        U = require_unitary(self.coupling, "coupling unitary")
        if U.shape[0] != self.system_dim * d_A:
            raise DimensionMismatchError(
                f"coupling has dimension {U.shape[0]}, system x probe needs {self.system_dim} x {d_A}")
        if self.pointer.dim != d_A:
            raise DimensionMismatchError(f"pointer observable acts on {self.pointer.dim}, probe has {d_A}")
        if self.probe_hamiltonian is not None and self.probe_hamiltonian.dim != d_A:
            raise DimensionMismatchError(
                f"probe Hamiltonian acts on {self.probe_hamiltonian.dim}, probe has {d_A}")
        U = U.copy()
        U.setflags(write=False)
        object.__setattr__(self, 'coupling', U)

    @property
    def apparatus_dim(self) -> int:
        return self.xi.dim

    @property
    def n_outcomes(self) -> int:
        return self.pointer.n_outcomes

    @property
    def space(self) -> CompositeSpace:
        return CompositeSpace((self.system_dim, self.apparatus_dim))

    @property
    def xi_energy(self) -> Optional[float]:
        """lambda_0 when |xi> is an eigenstate of H_A, otherwise None."""
        if self.probe_hamiltonian is None:
            return None
        H_A = self.probe_hamiltonian.matrix()
        xi = self.xi.amplitudes
        energy = real_expectation(np.vdot(xi, H_A @ xi), "probe energy")
        residual = np.max(np.abs(H_A @ xi - energy * xi))
        if residual > defaults.EIGENSTATE_TOL * max(1.0, max_norm(H_A)):
            return None
        return energy

    def require_probe_hamiltonian(self) -> HermitianObservable:
        if self.probe_hamiltonian is None:
            raise SchemeError("the scheme has no probe Hamiltonian")
        return self.probe_hamiltonian

    def require_xi_energy(self) -> float:
        energy = self.xi_energy
        if energy is None:
            raise SchemeError("the probe state is not an eigenstate of the probe Hamiltonian")
        return energy

    def with_probe_hamiltonian(self, probe_hamiltonian: HermitianObservable) -> "NormalMeasurementScheme":
        return replace(self, probe_hamiltonian=probe_hamiltonian)

    def with_xi(self, xi: PureState) -> "NormalMeasurementScheme":
        return replace(self, xi=xi)


class EffectiveWorkOperator(NamedTuple):
    operator: ComplexMatrix          # Gamma_xi(U^dagger H_tot U - H_tot)
    predicted: ComplexMatrix         # sum_m (lambda_m - lambda_0) P_m
    deviation: float
    probe_work: Dict[int, float]     # w_A(m) = lambda_m - lambda_0


class WeakConservation(NamedTuple):
    holds: bool
    probe_work: Dict[int, float]
    operator_vanishes: bool


def check_scheme_matches(scheme: NormalMeasurementScheme, obs: HermitianObservable):
    if scheme.system_dim != obs.dim:
        raise DimensionMismatchError(f"scheme couples a {scheme.system_dim}-dim system, observable has {obs.dim}")
    if scheme.n_outcomes != obs.n_outcomes:
        raise DimensionMismatchError(
            f"pointer has {scheme.n_outcomes} outcomes, observable has {obs.n_outcomes}")


def default_pointer_assignment(apparatus_dim: int, n_outcomes: int) -> List[int]:
    """Probe basis state a reads as outcome a mod N."""
    return [a % n_outcomes for a in range(apparatus_dim)]


def cyclic_shift(dim: int, step: int) -> ComplexMatrix:
    """|a> -> |a + step mod dim>"""
    return np.roll(np.eye(dim, dtype=complex), step, axis=0)


def build_canonical_scheme(obs: HermitianObservable, apparatus_dim: Optional[int] = None,
                           probe_energies: Optional[Sequence[float]] = None,
                           pointer_assignment: Optional[Sequence[int]] = None,
                           degeneracy_tol: float = defaults.DEGENERACY_TOL) -> NormalMeasurementScheme:
    """
    U = sum_m P_m (x) S_m with S_m the cyclic shift by m, xi = |0>, and
    Z_m collecting the probe basis states assigned to m. Basis state m is
    always assigned to outcome m, so U(psi (x) |0>) = sum_m P_m psi (x) |m>.
    H_A is diagonal with `probe_energies` (all zero when omitted).
    """
    n = obs.n_outcomes
    d_A = n if apparatus_dim is None else int(apparatus_dim)
    if d_A < n:
        raise SchemeError(f"probe dimension {d_A} is smaller than the {n} outcomes to record")

    assignment = (default_pointer_assignment(d_A, n) if pointer_assignment is None
                  else [int(m) for m in pointer_assignment])
    if len(assignment) != d_A:
        raise SchemeError(f"pointer assignment covers {len(assignment)} probe states, probe has {d_A}")
    if any(assignment[m] != m for m in range(n)):
        raise SchemeError("probe basis state m must be assigned to outcome m for every outcome m")
    if set(assignment) != set(range(n)):
        raise SchemeError(f"pointer assignment uses labels outside 0..{n - 1}")

    coupling = sum(np.kron(P, cyclic_shift(d_A, m)) for m, P in enumerate(obs.projections))

    energies = np.zeros(d_A) if probe_energies is None else np.asarray(probe_energies, dtype=float)
    if energies.shape != (d_A,):
        raise SchemeError(f"{energies.size} probe energies given for a {d_A}-dim probe")
    probe_hamiltonian = spectral_decompose(np.diag(energies).astype(complex), degeneracy_tol)

    return NormalMeasurementScheme(
        system_dim=obs.dim,
        xi=PureState.basis(d_A, 0),
        coupling=coupling,
        pointer=pointer_observable(assignment, n),
        probe_hamiltonian=probe_hamiltonian,
    )


def pointer_equal_energies(pointer_assignment: Sequence[int], outcome_energies: Sequence[float]) -> List[float]:
    """Probe energies making H_A = sum_m lambda_m Z_m for the given assignment."""
    return [float(outcome_energies[m]) for m in pointer_assignment]


def qubit_exchange_unitary() -> ComplexMatrix:
    """
    Qubit system, qubit probe: |m,0> -> |m,m>, |m,1> -> |m+1 mod 2, m>.
    Basis index of |s,a> is 2s + a.
    """
    U = np.zeros((4, 4), dtype=complex)
    for m in (0, 1):
        U[2 * m + m, 2 * m + 0] = 1.0
        U[2 * ((m + 1) % 2) + m, 2 * m + 1] = 1.0
    return U


# --- Dilation ---

def pointer_readout(scheme: NormalMeasurementScheme, joint_state, m: int) -> ComplexMatrix:
    """tr_A[(1 (x) Z_m) X]"""
    X = as_matrix(joint_state)
    return partial_trace(embed(scheme.pointer.projections[m], scheme.space, 1) @ X, scheme.space, keep=[0])


def premeasure(scheme: NormalMeasurementScheme, rho) -> ComplexMatrix:
    """U (rho (x) |xi><xi|) U^dagger; accepts a DensityOperator or any system operator."""
    T = rho.matrix if isinstance(rho, DensityOperator) else as_matrix(rho)
    if T.shape != (scheme.system_dim, scheme.system_dim):
        raise DimensionMismatchError(f"operator of shape {T.shape} on a {scheme.system_dim}-dim system")
    U = scheme.coupling
    return U @ tensor_product(T, scheme.xi.projector()) @ dagger(U)


def dilation_deviation(scheme: NormalMeasurementScheme, obs: HermitianObservable) -> float:
    """Largest entry of tr_A[(1 (x) Z_m) U(T (x) xi)U^dagger] - P_m T P_m over T = |i><j| and all m."""
    check_scheme_matches(scheme, obs)
    d = obs.dim
    worst = 0.0
    for i in range(d):
        for j in range(d):
            T = np.zeros((d, d), dtype=complex)
            T[i, j] = 1.0
            joint = premeasure(scheme, T)
            for m, P in enumerate(obs.projections):
                worst = max(worst, max_norm(pointer_readout(scheme, joint, m) - P @ T @ P))
    return worst


def verify_dilation(scheme: NormalMeasurementScheme, obs: HermitianObservable,
                    tol: float = defaults.CHECK_TOL) -> bool:
    deviation = dilation_deviation(scheme, obs)
    logger.debug(f"-> dilation deviation {deviation:.3e} (tol {tol:g})")
    return deviation <= tol


def pointer_states(scheme: NormalMeasurementScheme, obs: HermitianObservable) -> List[np.ndarray]:
    """
    |phi_m> per outcome. For P_m > 0 it is read off U(psi (x) xi) with psi in
    the range of P_m and must have unit norm; for P_m = 0 it is any unit
    vector in the range of Z_m (zero vector if Z_m = 0 too).
    """
    check_scheme_matches(scheme, obs)
    d, d_A = obs.dim, scheme.apparatus_dim
    states = []
    for m, P in enumerate(obs.projections):
        if obs.rank(m) > 0:
            column = int(np.argmax(np.linalg.norm(P, axis=0)))
            psi = P[:, column] / np.linalg.norm(P[:, column])
            out = (scheme.coupling @ np.kron(psi, scheme.xi.amplitudes)).reshape(d, d_A)
            phi = psi.conj() @ out
            norm = np.linalg.norm(phi)
            if abs(norm - 1.0) > 1e-8:
                raise SchemeError(f"coupling does not carry outcome {m} to a pointer state (norm {norm:.6g})")
        else:
            Z = scheme.pointer.projections[m]
            norms = np.linalg.norm(Z, axis=0)
            if norms.max() == 0:
                phi = np.zeros(d_A, dtype=complex)
            else:
                column = int(np.argmax(norms))
                phi = Z[:, column] / norms[column]
        states.append(phi)
    return states


# --- Energetics of the coupling ---

def measurement_hamiltonian(scheme: NormalMeasurementScheme, H: HermitianObservable) -> ComplexMatrix:
    """H_tot^(j) = H (x) 1 + 1 (x) H_A^(j)"""
    H_A = scheme.require_probe_hamiltonian()
    return embed(H.matrix(), scheme.space, 0) + embed(H_A.matrix(), scheme.space, 1)


def _energy_change_operator(scheme: NormalMeasurementScheme, H: HermitianObservable) -> ComplexMatrix:
    H_tot = measurement_hamiltonian(scheme, H)
    U = scheme.coupling
    return dagger(U) @ H_tot @ U - H_tot


def measurement_work(scheme: NormalMeasurementScheme, H: HermitianObservable, rho: DensityOperator) -> float:
    """W_meas = tr[(U^dagger H_tot U - H_tot) rho (x) |xi><xi|]"""
    check_scheme_matches(scheme, H)
    delta = _energy_change_operator(scheme, H)
    state = tensor_product(rho.matrix, scheme.xi.projector())
    return real_expectation(np.trace(delta @ state), "measurement work")


def restriction_map(B, xi: PureState) -> ComplexMatrix:
    """Gamma_xi(B) = (1 (x) <xi|) B (1 (x) |xi>), the adjoint of T -> T (x) |xi><xi|."""
    B = as_matrix(B)
    d_A = xi.dim
    if B.shape[0] != B.shape[1] or B.shape[0] % d_A:
        raise DimensionMismatchError(f"operator of shape {B.shape} does not factor over a {d_A}-dim probe")
    d = B.shape[0] // d_A
    blocks = B.reshape(d, d_A, d, d_A)
    return np.einsum('a,iajb,b->ij', xi.amplitudes.conj(), blocks, xi.amplitudes)


def probe_work(scheme: NormalMeasurementScheme, obs: HermitianObservable) -> Dict[int, float]:
    """w_A(m) = <phi_m|H_A|phi_m> - lambda_0 for every outcome."""
    lambda_0 = scheme.require_xi_energy()
    H_A = scheme.require_probe_hamiltonian().matrix()
    return {m: real_expectation(np.vdot(phi, H_A @ phi), "pointer-state energy") - lambda_0
            for m, phi in enumerate(pointer_states(scheme, obs))}


def effective_work_operator(scheme: NormalMeasurementScheme, H: HermitianObservable) -> EffectiveWorkOperator:
    """
    Gamma_xi(U^dagger H_tot U - H_tot), returned next to the prediction
    sum_m (lambda_m - lambda_0) P_m and their max-entry deviation.
    """
    check_scheme_matches(scheme, H)
    work = probe_work(scheme, H)
    operator = restriction_map(_energy_change_operator(scheme, H), scheme.xi)
    predicted = sum(work[m] * P for m, P in enumerate(H.projections))
    return EffectiveWorkOperator(operator, predicted, max_norm(operator - predicted), work)


def check_weak_energy_conservation(scheme: NormalMeasurementScheme, H: HermitianObservable,
                                   tol: float = defaults.CHECK_TOL) -> WeakConservation:
    """True iff lambda_m = lambda_0 for every outcome with P_m > 0."""
    effective = effective_work_operator(scheme, H)
    holds = all(abs(w) <= tol for m, w in effective.probe_work.items() if H.rank(m) > 0)
    scale = max(1.0, max_norm(measurement_hamiltonian(scheme, H)))
    operator_vanishes = max_norm(effective.operator) <= tol * scale
    if holds != operator_vanishes:
        logger.warning(f"-> weak conservation disagrees with its effective operator "
                       f"(per-outcome {holds}, operator {operator_vanishes})")
    return WeakConservation(holds, effective.probe_work, operator_vanishes)


def check_full_energy_conservation(scheme: NormalMeasurementScheme, H: HermitianObservable,
                                   tol: float = defaults.CHECK_TOL) -> bool:
    """[H_tot, U] = 0"""
    check_scheme_matches(scheme, H)
    H_tot = measurement_hamiltonian(scheme, H)
    U = scheme.coupling
    return max_norm(H_tot @ U - U @ H_tot) <= tol


def commutator_norm(scheme: NormalMeasurementScheme, H: HermitianObservable) -> float:
    H_tot = measurement_hamiltonian(scheme, H)
    U = scheme.coupling
    return max_norm(H_tot @ U - U @ H_tot)


def satisfies_pointer_equality(scheme: NormalMeasurementScheme, tol: float = defaults.CHECK_TOL) -> bool:
    """H_A = sum_m lambda_m Z_m with lambda_m = tr[Z_m H_A] / tr[Z_m]."""
    if scheme.probe_hamiltonian is None:
        return False
    H_A = scheme.probe_hamiltonian.matrix()
    rebuilt = np.zeros_like(H_A)
    for Z in scheme.pointer.projections:
        rank = np.trace(Z).real
        if rank > 0.5:
            rebuilt = rebuilt + (np.trace(Z @ H_A).real / rank) * Z
    return max_norm(rebuilt - H_A) <= tol * max(1.0, max_norm(H_A))
