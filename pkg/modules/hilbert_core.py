# modules/hilbert_core.py
# Operators are plain 2-D complex arrays. State dataclasses freeze their arrays after validation.
import logging
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

import defaults
from modules.errors import DimensionMismatchError, InvalidStateError, NotHermitianError, NotUnitaryError

logger = logging.getLogger(__name__)

ComplexMatrix = np.ndarray
SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


def frozen_array(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex, copy=True)
    array.setflags(write=False)
    return array


def as_matrix(A, name: str = "matrix") -> ComplexMatrix:
    """Coerces to a finite 2-D complex array."""
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidStateError(f"{name} has non-finite entries")
    return M


def require_square(A: ComplexMatrix, name: str = "matrix") -> int:
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {A.shape}")
    return A.shape[0]


def max_norm(A) -> float:
    """Max-absolute-entry norm, the comparison norm used throughout."""
    A = np.asarray(A)
    return float(np.max(np.abs(A))) if A.size else 0.0


def dagger(A: ComplexMatrix) -> ComplexMatrix:
    return A.conj().T


def is_hermitian(A: ComplexMatrix, tol: float = defaults.HERMITIAN_TOL) -> bool:
    return A.shape[0] == A.shape[1] and max_norm(A - dagger(A)) <= tol * max(1.0, max_norm(A))


def is_unitary(U: ComplexMatrix, tol: float = defaults.UNITARY_TOL) -> bool:
    if U.shape[0] != U.shape[1]:
        return False
    return max_norm(dagger(U) @ U - np.eye(U.shape[0])) <= tol


def require_unitary(U, name: str = "unitary", tol: float = defaults.UNITARY_TOL) -> ComplexMatrix:
    U = as_matrix(U, name)
    require_square(U, name)
    if not is_unitary(U, tol):
        raise NotUnitaryError(f"{name} is not unitary within {tol:g}")
    return U


def real_expectation(value: complex, what: str = "expectation value", tol: float = defaults.RESIDUE_TOL) -> float:
    """Drops the imaginary part of a trace that must be real, after checking it is negligible."""
    value = complex(value)
    if abs(value.imag) > tol * max(1.0, abs(value.real)):
        raise NotHermitianError(f"{what} has imaginary residue {value.imag:.3e}")
    return value.real


# --- Spaces and states ---

@dataclass(frozen=True)
class CompositeSpace:
    factor_dims: Tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims or any(d < 1 for d in dims):
            raise DimensionMismatchError(f"factor dimensions must be positive, got {self.factor_dims}")
        object.__setattr__(self, 'factor_dims', dims)

    @property
    def dim(self) -> int:
        return int(np.prod(self.factor_dims))

    def __len__(self):
        return len(self.factor_dims)

    def check_operator(self, M: ComplexMatrix, name: str = "operator"):
        if M.shape != (self.dim, self.dim):
            raise DimensionMismatchError(
                f"{name} has shape {M.shape}, space {list(self.factor_dims)} needs ({self.dim}, {self.dim})")


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if psi.size == 0 or not np.all(np.isfinite(psi)):
            raise InvalidStateError("pure state needs finite amplitudes")
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > defaults.NORM_TOL:
            raise InvalidStateError(f"pure state has norm {norm:.12g}, expected 1")
        object.__setattr__(self, 'amplitudes', frozen_array(psi))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def basis(cls, dim: int, index: int) -> "PureState":
        if not 0 <= index < dim:
            raise DimensionMismatchError(f"basis index {index} outside dimension {dim}")
        psi = np.zeros(dim, dtype=complex)
        psi[index] = 1.0
        return cls(psi)

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        psi = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise InvalidStateError("cannot normalize the zero vector")
        return cls(psi / norm)

    def projector(self) -> ComplexMatrix:
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True)
class DensityOperator:
    matrix: np.ndarray

    def __post_init__(self):
        rho = as_matrix(self.matrix, "density operator")
        require_square(rho, "density operator")
        if not is_hermitian(rho):
            raise InvalidStateError("density operator is not Hermitian")
        trace = np.trace(rho).real
        if abs(trace - 1.0) > defaults.NORM_TOL:
            raise InvalidStateError(f"density operator has trace {trace:.12g}, expected 1")
        smallest = float(np.min(linalg.eigvalsh(rho)))
        if smallest < -defaults.PSD_TOL:
            raise InvalidStateError(f"density operator has negative eigenvalue {smallest:.3e}")
        object.__setattr__(self, 'matrix', frozen_array(rho))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_pure(cls, state: PureState) -> "DensityOperator":
        return cls(state.projector())

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.eye(dim, dtype=complex) / dim)


# --- Composition and reduction ---

def tensor_product(*operators) -> ComplexMatrix:
    """Kronecker product, first factor outermost (row-major block convention)."""
    if not operators:
        raise DimensionMismatchError("tensor_product needs at least one operand")
    return reduce(np.kron, (np.asarray(op, dtype=complex) for op in operators))


def _slots(slot: Union[int, Sequence[int]], n: int) -> Tuple[int, ...]:
    slots = (slot,) if isinstance(slot, (int, np.integer)) else tuple(slot)
    if len(set(slots)) != len(slots) or any(not 0 <= s < n for s in slots):
        raise DimensionMismatchError(f"invalid slot selection {slot} for {n} factors")
    return tuple(int(s) for s in slots)


def embed(A, space: CompositeSpace, slot: Union[int, Sequence[int]]) -> ComplexMatrix:
    """
    Places A on the factor(s) `slot` of `space` with identity elsewhere.
    A tuple of slots means A acts on those factors in the given order, e.g.
    a system-probe coupling U on slots (0, 2) of system x probe0 x probe1.
    """
    A = as_matrix(A)
    require_square(A)
    dims = space.factor_dims
    slots = _slots(slot, len(dims))
    sub_dim = int(np.prod([dims[s] for s in slots]))
    if A.shape[0] != sub_dim:
        raise DimensionMismatchError(
            f"operator of dimension {A.shape[0]} cannot act on factors {list(slots)} of {list(dims)}")
    rest = [k for k in range(len(dims)) if k not in slots]
    full = np.kron(A, np.eye(int(np.prod([dims[k] for k in rest])), dtype=complex))
    order = list(slots) + rest
    if order == list(range(len(dims))):
        return full
    tensor = full.reshape([dims[k] for k in order] * 2)
    inverse = list(np.argsort(order))
    tensor = tensor.transpose(inverse + [len(dims) + i for i in inverse])
    return tensor.reshape(space.dim, space.dim)


def partial_trace(M, space: CompositeSpace, keep: Iterable[int]) -> ComplexMatrix:
    """Traces out every factor not in `keep`; kept factors stay in their original order."""
    M = as_matrix(M)
    space.check_operator(M)
    dims = space.factor_dims
    kept = sorted(_slots(keep, len(dims)))
    traced = [k for k in range(len(dims)) if k not in kept]
    tensor = M.reshape(list(dims) * 2)
    n = len(dims)
    for k in sorted(traced, reverse=True):
        tensor = np.trace(tensor, axis1=k, axis2=k + n)
        n -= 1
    kept_dim = int(np.prod([dims[k] for k in kept])) if kept else 1
    return tensor.reshape(kept_dim, kept_dim)


# --- Spectral grouping ---

def group_eigenvalues(H, degeneracy_tol: float = defaults.DEGENERACY_TOL) -> List[Tuple[float, ComplexMatrix]]:
    """
    Distinct eigenvalues of a Hermitian matrix with their spectral projections.

    Sorted eigenvalues are merged while the gap to the previous one is below
    degeneracy_tol * max(1, ||H||); a band's eigenvalue is the mean of its
    members and its projection is rebuilt from the re-orthonormalized
    eigenvector cluster.
    """
    H = as_matrix(H, "Hamiltonian")
    require_square(H, "Hamiltonian")
    if not is_hermitian(H):
        raise NotHermitianError(f"matrix is not Hermitian (deviation {max_norm(H - dagger(H)):.3e})")
    H = (H + dagger(H)) / 2
    values, vectors = linalg.eigh(H)
    threshold = degeneracy_tol * max(1.0, max_norm(H))

    clusters = [[0]]
    for i in range(1, len(values)):
        if values[i] - values[i - 1] < threshold:
            clusters[-1].append(i)
        else:
            clusters.append([i])

    bands = []
    for cluster in clusters:
        q, _ = linalg.qr(vectors[:, cluster], mode='economic')
        projection = q @ dagger(q)
        bands.append((float(np.mean(values[cluster])), (projection + dagger(projection)) / 2))
    logger.debug(f"-> {len(values)} eigenvalues grouped into {len(bands)} bands")
    return bands


# --- Seeded random generation ---

def _rng(seed: SeedLike) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _ginibre(dim: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))


def random_unitary(dim: int, seed: SeedLike = None) -> ComplexMatrix:
    """Haar-random unitary: QR of a complex Gaussian matrix with the phases of R's diagonal divided out."""
    if dim < 1:
        raise DimensionMismatchError(f"dimension must be at least 1, got {dim}")
    q, r = linalg.qr(_ginibre(dim, _rng(seed)))
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases


def random_density(dim: int, seed: SeedLike = None) -> DensityOperator:
    """Full-rank mixed state G G^dagger / tr from a complex Gaussian G."""
    if dim < 1:
        raise DimensionMismatchError(f"dimension must be at least 1, got {dim}")
    g = _ginibre(dim, _rng(seed))
    rho = g @ dagger(g)
    rho = (rho + dagger(rho)) / 2
    return DensityOperator(rho / np.trace(rho).real)


def random_pure(dim: int, seed: SeedLike = None) -> PureState:
    if dim < 1:
        raise DimensionMismatchError(f"dimension must be at least 1, got {dim}")
    rng = _rng(seed)
    return PureState.normalized(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))


def random_hermitian(dim: int, seed: SeedLike = None, levels: Sequence[float] = None) -> ComplexMatrix:
    """
    Hermitian matrix with a Haar-random eigenbasis. When `levels` is given,
    eigenvalues are drawn from it (with replacement), which produces
    degenerate spectra on purpose.
    """
    rng = _rng(seed)
    if levels is None:
        eigenvalues = rng.uniform(-1.0, 1.0, size=dim)
    else:
        eigenvalues = rng.choice(np.asarray(levels, dtype=float), size=dim)
    U = random_unitary(dim, rng)
    H = U @ np.diag(eigenvalues) @ dagger(U)
    return (H + dagger(H)) / 2
