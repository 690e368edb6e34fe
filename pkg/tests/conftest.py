# tests/conftest.py
import os
import sys

import numpy as np
import pytest

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.insert(0, PROJECT_ROOT)

from modules.data_loader import load_scenario  # noqa: E402
from modules.hilbert_core import DensityOperator, PureState  # noqa: E402
from modules.observables import spectral_decompose  # noqa: E402

SCENARIO_DIR = os.path.join(PROJECT_ROOT, 'data', 'scenarios')
H_SQRT = 0.7071067811865476


def scenario_path(name: str) -> str:
    return os.path.join(SCENARIO_DIR, f"{name}.json")


@pytest.fixture
def qubit_hamiltonian():
    """H = diag(0, 1)"""
    return spectral_decompose(np.diag([0.0, 1.0]).astype(complex))


@pytest.fixture
def hadamard():
    return np.array([[H_SQRT, H_SQRT], [H_SQRT, -H_SQRT]], dtype=complex)


@pytest.fixture
def plus_state():
    return DensityOperator.from_pure(PureState(np.array([H_SQRT, H_SQRT])))


@pytest.fixture
def flat_probe_qubit():
    return load_scenario(scenario_path('flat_probe_qubit'))


@pytest.fixture
def padded_three_outcome():
    return load_scenario(scenario_path('padded_three_outcome'))


@pytest.fixture
def counterexample():
    return load_scenario(scenario_path('counterexample_xi_plus'))


@pytest.fixture
def pointer_equal():
    return load_scenario(scenario_path('pointer_equal'))


@pytest.fixture
def trivial_probes():
    return load_scenario(scenario_path('trivial_probes'))


@pytest.fixture
def scenario_file():
    """Path builder for the bundled scenario documents."""
    return scenario_path
