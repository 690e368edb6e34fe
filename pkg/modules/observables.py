# modules/observables.py
import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np

import defaults
from modules.errors import DimensionMismatchError, InvalidStateError
from modules.hilbert_core import (ComplexMatrix, DensityOperator, frozen_array, as_matrix, dagger, group_eigenvalues,
                                  max_norm, real_expectation, require_square)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HermitianObservable:
    """
    An observable sum_m eigenvalues[m] * projections[m].

    Outcome labels are the indices 0..N-1. A projection may be the zero
    operator; such an outcome exists but is never observed. Two outcomes may
    share an eigenvalue only if one of them has a zero projection.
    """
    eigenvalues: Tuple[float, ...]
    projections: Tuple[np.ndarray, ...]

    def __post_init__(self):
        eigenvalues = tuple(float(e) for e in self.eigenvalues)
        projections = tuple(frozen_array(as_matrix(P, "projection")) for P in self.projections)
        if not projections or len(eigenvalues) != len(projections):
            raise DimensionMismatchError(
                f"{len(eigenvalues)} eigenvalues for {len(projections)} projections")
        dim = require_square(projections[0], "projection")
        if any(P.shape != (dim, dim) for P in projections):
            raise DimensionMismatchError("projections of an observable must share one dimension")

        total = np.zeros((dim, dim), dtype=complex)
        for m, P in enumerate(projections):
            total += P
            for n in range(m, len(projections)):
                expected = P if m == n else 0
                if max_norm(P @ projections[n] - expected) > defaults.ORTHOGONALITY_TOL:
                    raise InvalidStateError(f"projections {m} and {n} violate P_m P_n = delta_mn P_m")
        if max_norm(total - np.eye(dim)) > defaults.COMPLETENESS_TOL:
            raise InvalidStateError("projections do not sum to the identity")

        ranks = [int(round(np.trace(P).real)) for P in projections]
        for m in range(len(eigenvalues)):
            for n in range(m + 1, len(eigenvalues)):
                if ranks[m] and ranks[n] and eigenvalues[m] == eigenvalues[n]:
                    raise InvalidStateError(f"outcomes {m} and {n} share eigenvalue {eigenvalues[m]}")

        object.__setattr__(self, 'eigenvalues', eigenvalues)
        object.__setattr__(self, 'projections', projections)

    @classmethod
    def from_projections(cls, eigenvalues: Sequence[float], projections: Sequence) -> "HermitianObservable":
        return cls(tuple(eigenvalues), tuple(np.asarray(P, dtype=complex) for P in projections))

    @property
    def dim(self) -> int:
        return self.projections[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.projections)

    @property
    def labels(self) -> range:
        return range(self.n_outcomes)

    def rank(self, m: int) -> int:
        return int(round(np.trace(self.projections[m]).real))

    def matrix(self) -> ComplexMatrix:
        return sum(e * P for e, P in zip(self.eigenvalues, self.projections))

    def evolution(self, theta: float) -> ComplexMatrix:
        """exp(-i theta A), built from the spectral form so it is unitary to rounding."""
        return sum(np.exp(-1j * theta * e) * P for e, P in zip(self.eigenvalues, self.projections))

    def band_of(self, value: float, tol: float = defaults.DEGENERACY_TOL) -> int:
        """Label of the non-zero band whose eigenvalue equals `value` within tol * max(1, scale)."""
        scale = max(1.0, max(abs(e) for e in self.eigenvalues))
        for m, e in enumerate(self.eigenvalues):
            if self.rank(m) and abs(e - value) <= tol * scale:
                return m
        raise InvalidStateError(f"{value!r} is not an eigenvalue of the observable")

    def check_operator(self, T: ComplexMatrix, name: str = "operator"):
        if T.shape != (self.dim, self.dim):
            raise DimensionMismatchError(f"{name} has shape {T.shape}, observable acts on dimension {self.dim}")


class Branch(NamedTuple):
    label: int
    state: ComplexMatrix        # unnormalized P_m rho P_m
    probability: float


def spectral_decompose(H, degeneracy_tol: float = defaults.DEGENERACY_TOL) -> HermitianObservable:
    eigenvalues, projections = zip(*group_eigenvalues(H, degeneracy_tol))
    return HermitianObservable(eigenvalues, projections)


def pointer_observable(assignment: Sequence[int], n_outcomes: int) -> HermitianObservable:
    """
    Z_m = sum of |a><a| over probe basis states a assigned to outcome m.
    The eigenvalue of outcome m is the label m itself.
    """
    dim = len(assignment)
    projections = [np.zeros((dim, dim), dtype=complex) for _ in range(n_outcomes)]
    for a, m in enumerate(assignment):
        if not 0 <= m < n_outcomes:
            raise DimensionMismatchError(f"probe state {a} assigned to unknown outcome {m}")
        projections[m][a, a] = 1.0
    return HermitianObservable(tuple(float(m) for m in range(n_outcomes)), tuple(projections))


def pad_observable(obs: HermitianObservable, extra_energies: Sequence[float]) -> HermitianObservable:
    """Appends zero-rank outcomes, e.g. eps1 P1 + eps2 P2 seen as eps1 P1 + eps2 P2 + eps3 * 0."""
    zero = np.zeros((obs.dim, obs.dim), dtype=complex)
    return HermitianObservable(obs.eigenvalues + tuple(float(e) for e in extra_energies),
                               obs.projections + tuple(zero for _ in extra_energies))


def luders_channel(obs: HermitianObservable, T) -> ComplexMatrix:
    """sum_m P_m T P_m"""
    T = as_matrix(T)
    obs.check_operator(T)
    return sum(P @ T @ P for P in obs.projections)


def ideal_measurement_branches(obs: HermitianObservable, rho: DensityOperator) -> List[Branch]:
    """One branch per outcome, zero-probability ones included."""
    obs.check_operator(rho.matrix, "density operator")
    branches = []
    for m, P in enumerate(obs.projections):
        state = P @ rho.matrix @ P
        branches.append(Branch(m, state, real_expectation(np.trace(state), "branch probability")))
    return branches


def commutes(A, B, tol: float = defaults.CHECK_TOL) -> bool:
    A, B = as_matrix(A), as_matrix(B)
    require_square(A)
    if A.shape != B.shape:
        raise DimensionMismatchError(f"cannot commute shapes {A.shape} and {B.shape}")
    return max_norm(A @ B - B @ A) <= tol * max(1.0, max_norm(A) * max_norm(B))


def expectation(A, rho: DensityOperator) -> float:
    A = as_matrix(A)
    if A.shape != rho.matrix.shape:
        raise DimensionMismatchError(f"operator shape {A.shape} does not match state shape {rho.matrix.shape}")
    return real_expectation(np.trace(A @ rho.matrix))


def heisenberg(V: ComplexMatrix, A: ComplexMatrix) -> ComplexMatrix:
    return dagger(V) @ A @ V
