# modules/data_loader.py
"""
Scenario files: JSON documents describing a system, its process, two probes,
probe free-evolution durations, an initial state and tolerances.

    {
      "version": "tpm-scenario/1",
      "label": "...",
      "system": {"hamiltonian": M, "process_unitary": M, "padding_energies": [...]},
      "probes": [{"dim": 2, "probe_energies": [...], "xi": 0, "pointer_assignment": [...],
                  "explicit_unitary": M, "hamiltonian": M, "explicit_pointer": [M, ...]}, {...}],
      "thetas": [theta0, theta1],
      "state": {"kind": "matrix" | "pure" | "maximally_mixed", "data": ...},
      "tolerances": {"degeneracy_tol": ..., "bin_tol": ..., "check_tol": ...},
      "expected_fail": ["self_consistency", ...]
    }

Matrices are row-major lists of rows; a complex entry is either a plain
number or a [re, im] pair. A document with a "family" block instead of
"system" describes a seeded random family (see modules/sweep.py).
"""
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

import defaults
from modules.errors import ScenarioFormatError, TPMError
from modules.hilbert_core import DensityOperator, PureState, require_unitary
from modules.measurement_scheme import NormalMeasurementScheme, build_canonical_scheme, default_pointer_assignment
from modules.observables import HermitianObservable, pad_observable, pointer_observable, spectral_decompose
from modules.tpm_extended import ExtendedScenario

logger = logging.getLogger(__name__)

TOLERANCE_KEYS = ('degeneracy_tol', 'bin_tol', 'check_tol')


@dataclass
class ScenarioFile:
    label: str
    scenario: ExtendedScenario
    state: DensityOperator
    tolerances: Dict[str, float] = field(default_factory=dict)
    expected_fail: List[str] = field(default_factory=list)
    trivial_probes: bool = False
    digest: str = ""
    document: Dict[str, Any] = field(default_factory=dict)


# --- Encoding ---

def decode_complex(value, where: str) -> complex:
    if isinstance(value, bool):
        raise ScenarioFormatError(where, "expected a number or [re, im]")
    if isinstance(value, (int, float)):
        return complex(float(value), 0.0)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(float(value[0]), float(value[1]))
    raise ScenarioFormatError(where, f"expected a number or [re, im], got {value!r}")


def decode_vector(value, where: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ScenarioFormatError(where, "expected a non-empty list of complex entries")
    return np.array([decode_complex(v, f"{where}[{i}]") for i, v in enumerate(value)], dtype=complex)


def decode_matrix(value, where: str) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(row, list) for row in value):
        raise ScenarioFormatError(where, "expected a list of rows")
    width = len(value[0])
    if any(len(row) != width for row in value):
        raise ScenarioFormatError(where, "rows have different lengths")
    if width != len(value):
        raise ScenarioFormatError(where, f"matrix is {len(value)}x{width}, expected square")
    return np.array([[decode_complex(v, f"{where}[{i}][{j}]") for j, v in enumerate(row)]
                     for i, row in enumerate(value)], dtype=complex)


def encode_complex(z: complex):
    z = complex(z)
    return float(z.real) if z.imag == 0 else [float(z.real), float(z.imag)]


def encode_vector(v) -> list:
    return [encode_complex(z) for z in np.asarray(v).reshape(-1)]


def encode_matrix(M) -> list:
    return [[encode_complex(z) for z in row] for row in np.asarray(M)]


def scenario_digest(document: Dict[str, Any]) -> str:
    canonical = json.dumps(document, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


# --- Field-level validation ---

def _field(document: dict, key: str, where: str, required: bool = True, default=None):
    if key in document:
        return document[key]
    if required:
        raise ScenarioFormatError(f"{where}.{key}" if where else key, "missing")
    return default


def _validated(where: str, build):
    """Runs `build` and re-raises any pipeline error as a ScenarioFormatError on `where`."""
    try:
        return build()
    except ScenarioFormatError:
        raise
    except TPMError as e:
        raise ScenarioFormatError(where, str(e)) from e


def read_tolerances(document: dict) -> Dict[str, float]:
    raw = _field(document, 'tolerances', '', required=False, default={}) or {}
    if not isinstance(raw, dict):
        raise ScenarioFormatError('tolerances', "expected a mapping")
    tolerances = {}
    for key, value in raw.items():
        if key not in TOLERANCE_KEYS:
            raise ScenarioFormatError(f"tolerances.{key}", f"unknown tolerance; use one of {', '.join(TOLERANCE_KEYS)}")
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
            raise ScenarioFormatError(f"tolerances.{key}", f"must be a positive number, got {value!r}")
        tolerances[key] = float(value)
    return tolerances


def _read_system(document: dict, degeneracy_tol: float):
    system = _field(document, 'system', '')
    if not isinstance(system, dict):
        raise ScenarioFormatError('system', "expected a mapping")
    H_matrix = decode_matrix(_field(system, 'hamiltonian', 'system'), 'system.hamiltonian')
    H = _validated('system.hamiltonian', lambda: spectral_decompose(H_matrix, degeneracy_tol))
    padding = _field(system, 'padding_energies', 'system', required=False, default=[])
    if padding:
        H = _validated('system.padding_energies', lambda: pad_observable(H, [float(e) for e in padding]))
    V = decode_matrix(_field(system, 'process_unitary', 'system'), 'system.process_unitary')
    _validated('system.process_unitary', lambda: require_unitary(V, "process unitary"))
    return H, V


def _read_xi(value, dim: int, where: str) -> PureState:
    if isinstance(value, int) and not isinstance(value, bool):
        return _validated(where, lambda: PureState.basis(dim, value))
    return _validated(where, lambda: PureState(decode_vector(value, where)))


def _probe_hamiltonian(probe: dict, dim: int, where: str, degeneracy_tol: float) -> Optional[HermitianObservable]:
    if 'hamiltonian' in probe:
        H_A = decode_matrix(probe['hamiltonian'], f"{where}.hamiltonian")
        return _validated(f"{where}.hamiltonian", lambda: spectral_decompose(H_A, degeneracy_tol))
    energies = probe.get('probe_energies')
    if energies is None:
        return None
    if not isinstance(energies, list) or len(energies) != dim:
        raise ScenarioFormatError(f"{where}.probe_energies", f"expected {dim} real numbers")
    return _validated(f"{where}.probe_energies",
                      lambda: spectral_decompose(np.diag([float(e) for e in energies]).astype(complex),
                                                 degeneracy_tol))


def _read_probe(probe: dict, H: HermitianObservable, where: str, degeneracy_tol: float) -> NormalMeasurementScheme:
    if not isinstance(probe, dict):
        raise ScenarioFormatError(where, "expected a mapping")
    n = H.n_outcomes
    dim = int(_field(probe, 'dim', where, required=False, default=n))
    assignment = _field(probe, 'pointer_assignment', where, required=False)

    if 'explicit_unitary' not in probe:
        energies = probe.get('probe_energies')
        scheme = _validated(where, lambda: build_canonical_scheme(H, dim, energies, assignment, degeneracy_tol))
        if 'hamiltonian' in probe:
            scheme = scheme.with_probe_hamiltonian(_probe_hamiltonian(probe, dim, where, degeneracy_tol))
        if 'xi' in probe:
            scheme = _validated(f"{where}.xi", lambda: scheme.with_xi(_read_xi(probe['xi'], dim, f"{where}.xi")))
        return scheme

    coupling = decode_matrix(probe['explicit_unitary'], f"{where}.explicit_unitary")
    if 'explicit_pointer' in probe:
        projections = [decode_matrix(Z, f"{where}.explicit_pointer[{m}]")
                       for m, Z in enumerate(probe['explicit_pointer'])]
        pointer = _validated(f"{where}.explicit_pointer", lambda: HermitianObservable.from_projections(
            [float(m) for m in range(len(projections))], projections))
    else:
        assignment = default_pointer_assignment(dim, n) if assignment is None else assignment
        pointer = _validated(f"{where}.pointer_assignment", lambda: pointer_observable(assignment, n))
    probe_hamiltonian = _probe_hamiltonian(probe, dim, where, degeneracy_tol)
    if probe_hamiltonian is None:
        probe_hamiltonian = spectral_decompose(np.zeros((dim, dim), dtype=complex), degeneracy_tol)
    xi = _read_xi(probe.get('xi', 0), dim, f"{where}.xi")
    return _validated(f"{where}.explicit_unitary", lambda: NormalMeasurementScheme(
        system_dim=H.dim, xi=xi, coupling=coupling, pointer=pointer, probe_hamiltonian=probe_hamiltonian))


def _read_state(document: dict, dim: int) -> DensityOperator:
    state = _field(document, 'state', '', required=False)
    if state is None:
        logger.warning("-> no initial state given, using the maximally mixed state")
        return DensityOperator.maximally_mixed(dim)
    kind = _field(state, 'kind', 'state')
    if kind == 'maximally_mixed':
        return DensityOperator.maximally_mixed(dim)
    data = _field(state, 'data', 'state')
    if kind == 'pure':
        return _validated('state.data', lambda: DensityOperator.from_pure(_read_xi(data, dim, 'state.data')))
    if kind == 'matrix':
        rho = decode_matrix(data, 'state.data')
        return _validated('state.data', lambda: DensityOperator(rho))
    raise ScenarioFormatError('state.kind', f"unknown kind {kind!r}; use matrix, pure or maximally_mixed")


def parse_scenario(document: Dict[str, Any], settings_tolerances: Optional[Dict[str, float]] = None) -> ScenarioFile:
    """Validates a decoded scenario document; `settings_tolerances` fill tolerances the file leaves out."""
    if not isinstance(document, dict):
        raise ScenarioFormatError('document', "expected a JSON object")
    version = document.get('version', defaults.SCENARIO_VERSION)
    if version != defaults.SCENARIO_VERSION:
        raise ScenarioFormatError('version', f"unsupported version {version!r}")

    tolerances = dict(settings_tolerances or {})
    tolerances.update(read_tolerances(document))
    degeneracy_tol = tolerances.get('degeneracy_tol', defaults.DEGENERACY_TOL)

    H, V = _read_system(document, degeneracy_tol)
    probes = _field(document, 'probes', '', required=False)
    trivial = probes is None
    if trivial:
        logger.warning("-> scenario has no probes, substituting trivial probes (d_A = N, H_A = 0)")
        schemes = [build_canonical_scheme(H, degeneracy_tol=degeneracy_tol) for _ in range(2)]
    else:
        if not isinstance(probes, list) or len(probes) != 2:
            raise ScenarioFormatError('probes', "expected exactly two probe entries")
        schemes = [_read_probe(p, H, f"probes[{j}]", degeneracy_tol) for j, p in enumerate(probes)]

    thetas = _field(document, 'thetas', '', required=False, default=[0.0, 0.0])
    if not isinstance(thetas, list) or len(thetas) != 2:
        raise ScenarioFormatError('thetas', "expected [theta0, theta1]")
    scenario = _validated('scenario', lambda: ExtendedScenario(
        H, V, schemes[0], schemes[1], float(thetas[0]), float(thetas[1])))
    state = _read_state(document, H.dim)

    expected_fail = list(_field(document, 'expected_fail', '', required=False, default=[]))
    unknown = [name for name in expected_fail if name not in defaults.CHECK_NAMES]
    if unknown:
        raise ScenarioFormatError('expected_fail', f"unknown check names {unknown}")

    return ScenarioFile(
        label=str(document.get('label', '')),
        scenario=scenario,
        state=state,
        tolerances=tolerances,
        expected_fail=expected_fail,
        trivial_probes=trivial,
        digest=scenario_digest(document),
        document=document,
    )


def read_document(path: str) -> Dict[str, Any]:
    if not os.path.exists(path):
        raise ScenarioFormatError('path', f"scenario file not found at {path}")
    with open(path, encoding='utf-8') as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise ScenarioFormatError('document', f"not valid JSON ({e.msg} at line {e.lineno})") from None


def load_scenario(path: str, settings_tolerances: Optional[Dict[str, float]] = None) -> ScenarioFile:
    document = read_document(path)
    if 'family' in document:
        raise ScenarioFormatError('family', "this file describes a random family; run it through the sweep")
    loaded = parse_scenario(document, settings_tolerances)
    logger.info(f"-> loaded scenario '{loaded.label or os.path.basename(path)}' "
                f"(total dimension {loaded.scenario.space.dim})")
    return loaded


def _probe_document(scheme: NormalMeasurementScheme) -> Dict[str, Any]:
    probe = {
        'dim': scheme.apparatus_dim,
        'explicit_unitary': encode_matrix(scheme.coupling),
        'explicit_pointer': [encode_matrix(Z) for Z in scheme.pointer.projections],
        'xi': encode_vector(scheme.xi.amplitudes),
    }
    if scheme.probe_hamiltonian is not None:
        probe['hamiltonian'] = encode_matrix(scheme.probe_hamiltonian.matrix())
    return probe


def scenario_document(scn: ExtendedScenario, rho: DensityOperator, tolerances: Optional[Dict[str, float]] = None,
                      label: str = "", expected_fail: Sequence[str] = ()) -> Dict[str, Any]:
    """
    Scenario document for an in-memory scenario, with every probe written out
    explicitly. Zero-rank outcomes of the system Hamiltonian become
    `padding_energies` and come back after the observed bands.
    """
    H = scn.hamiltonian
    document = {
        'version': defaults.SCENARIO_VERSION,
        'label': label,
        'system': {'hamiltonian': encode_matrix(H.matrix()), 'process_unitary': encode_matrix(scn.process)},
        'probes': [_probe_document(scn.scheme0), _probe_document(scn.scheme1)],
        'thetas': [float(scn.theta0), float(scn.theta1)],
        'state': {'kind': 'matrix', 'data': encode_matrix(rho.matrix)},
    }
    padding = [e for m, e in enumerate(H.eigenvalues) if H.rank(m) == 0]
    if padding:
        document['system']['padding_energies'] = padding
    if tolerances:
        document['tolerances'] = {k: float(v) for k, v in tolerances.items() if k in TOLERANCE_KEYS}
    if expected_fail:
        document['expected_fail'] = list(expected_fail)
    return document


def write_scenario(document: Dict[str, Any], path: str) -> str:
    """Writes a scenario document; returns its digest."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(document, f, indent=2)
        f.write('\n')
    return scenario_digest(document)
