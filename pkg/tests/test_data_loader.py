# tests/test_data_loader.py
import copy
import json

import numpy as np
import pytest

from modules.data_loader import (decode_complex, decode_matrix, encode_matrix, load_scenario, parse_scenario,
                                 scenario_digest, scenario_document, write_scenario)
from modules.errors import ScenarioFormatError
from modules.measurement_scheme import verify_dilation
from modules.sweep import SweepConfig, generate_scenario
from modules.tpm_extended import average_total_work, extended_tpm, total_unmeasured_work


def _document(flat_probe_qubit):
    return copy.deepcopy(flat_probe_qubit.document)


def _field_of(document):
    with pytest.raises(ScenarioFormatError) as info:
        parse_scenario(document)
    return info.value.field


def test_complex_entries():
    assert decode_complex(0.5, "x") == 0.5
    assert decode_complex([0.5, -1.0], "x") == complex(0.5, -1.0)
    for bad in (True, "1", [1.0], [1.0, 2.0, 3.0], None):
        with pytest.raises(ScenarioFormatError):
            decode_complex(bad, "x")


def test_matrix_codec_keeps_complex_entries():
    M = np.array([[1.0, 1j], [-1j, 2.0]])
    encoded = encode_matrix(M)
    assert encoded == [[1.0, [0.0, 1.0]], [[0.0, -1.0], 2.0]]
    np.testing.assert_array_equal(decode_matrix(encoded, "m"), M)


def test_matrix_shape_errors():
    for bad in ([[1, 0], [0]], [[1, 0, 0], [0, 1, 0]], [], "I"):
        with pytest.raises(ScenarioFormatError):
            decode_matrix(bad, "m")


def test_loaded_dimensions(flat_probe_qubit, padded_three_outcome):
    assert flat_probe_qubit.scenario.space.factor_dims == (2, 2, 2)
    assert padded_three_outcome.scenario.space.factor_dims == (2, 3, 3)
    assert padded_three_outcome.scenario.hamiltonian.n_outcomes == 3
    assert padded_three_outcome.scenario.theta0 == pytest.approx(0.3)
    assert flat_probe_qubit.expected_fail == ["full_conservation"]
    assert flat_probe_qubit.tolerances['check_tol'] == 1e-10


def test_explicit_coupling_is_a_dilation(flat_probe_qubit, counterexample):
    for loaded in (flat_probe_qubit, counterexample):
        scn = loaded.scenario
        assert verify_dilation(scn.scheme0, scn.hamiltonian)


def test_counterexample_probe_state_is_not_an_eigenstate(counterexample):
    assert counterexample.scenario.scheme0.xi_energy is None
    assert not counterexample.scenario.xi_eigenstates


def test_missing_probes_become_trivial(trivial_probes):
    assert trivial_probes.trivial_probes
    H_A0, H_A1 = trivial_probes.scenario.probe_hamiltonians
    assert H_A0.eigenvalues == (0.0,)
    assert trivial_probes.scenario.scheme0.apparatus_dim == 2


def test_write_and_reload(tmp_path, flat_probe_qubit):
    path = tmp_path / "nested" / "copy.json"
    digest = write_scenario(flat_probe_qubit.document, str(path))
    assert digest == flat_probe_qubit.digest
    reloaded = load_scenario(str(path))
    assert reloaded.digest == flat_probe_qubit.digest
    np.testing.assert_array_equal(reloaded.scenario.scheme0.coupling, flat_probe_qubit.scenario.scheme0.coupling)
    np.testing.assert_array_equal(reloaded.state.matrix, flat_probe_qubit.state.matrix)


def test_digest_ignores_key_order(flat_probe_qubit):
    document = _document(flat_probe_qubit)
    reordered = json.loads(json.dumps(document, sort_keys=True))
    assert scenario_digest(reordered) == scenario_digest(document)
    document['thetas'] = [0.1, 0.0]
    assert scenario_digest(document) != flat_probe_qubit.digest


def test_non_unitary_process_names_its_field(flat_probe_qubit):
    document = _document(flat_probe_qubit)
    document['system']['process_unitary'] = [[1.0, 1.0], [0.0, 1.0]]
    assert _field_of(document) == 'system.process_unitary'


def test_non_hermitian_hamiltonian_names_its_field(flat_probe_qubit):
    document = _document(flat_probe_qubit)
    document['system']['hamiltonian'] = [[0.0, 1.0], [0.0, 1.0]]
    assert _field_of(document) == 'system.hamiltonian'


@pytest.mark.parametrize("edit, field", [
    (lambda d: d.pop('system'), 'system'),
    (lambda d: d['probes'].pop(), 'probes'),
    (lambda d: d.update(thetas=[0.0]), 'thetas'),
    (lambda d: d.update(version='tpm-scenario/0'), 'version'),
    (lambda d: d.update(tolerances={'bin_tol': -1.0}), 'tolerances.bin_tol'),
    (lambda d: d.update(tolerances={'speed': 1.0}), 'tolerances.speed'),
    (lambda d: d.update(expected_fail=['entropy']), 'expected_fail'),
    (lambda d: d.update(state={'kind': 'thermal', 'data': 0}), 'state.kind'),
    (lambda d: d.update(state={'kind': 'pure', 'data': [1.0, 1.0]}), 'state.data'),
    (lambda d: d['probes'][0].update(probe_energies=[0.5]), 'probes[0].probe_energies'),
    (lambda d: d['probes'][0].update(xi=5), 'probes[0].xi'),
])
def test_invalid_documents_name_the_field(flat_probe_qubit, edit, field):
    document = _document(flat_probe_qubit)
    edit(document)
    assert _field_of(document) == field


def test_probe_smaller_than_outcomes_is_rejected(pointer_equal):
    document = copy.deepcopy(pointer_equal.document)
    document['probes'][0] = {'dim': 1, 'probe_energies': [0.0], 'xi': 0}
    assert _field_of(document) == 'probes[0]'


def test_probe_hamiltonian_matrix(pointer_equal):
    document = copy.deepcopy(pointer_equal.document)
    document['probes'][1] = {'dim': 2, 'hamiltonian': [[0.0, 0.0], [0.0, 2.0]], 'xi': 0}
    loaded = parse_scenario(document)
    assert loaded.scenario.scheme1.probe_hamiltonian.eigenvalues == pytest.approx((0.0, 2.0))


def test_state_kinds(flat_probe_qubit, caplog):
    document = _document(flat_probe_qubit)
    document['state'] = {'kind': 'matrix', 'data': [[0.5, [0.0, 0.5]], [[0.0, -0.5], 0.5]]}
    assert parse_scenario(document).state.matrix[0, 1] == pytest.approx(0.5j)
    document['state'] = {'kind': 'maximally_mixed'}
    np.testing.assert_allclose(parse_scenario(document).state.matrix, np.eye(2) / 2)
    document.pop('state')
    np.testing.assert_allclose(parse_scenario(document).state.matrix, np.eye(2) / 2)
    assert "maximally mixed" in caplog.text


def test_file_errors(tmp_path, scenario_file):
    with pytest.raises(ScenarioFormatError) as info:
        load_scenario(str(tmp_path / "absent.json"))
    assert info.value.field == 'path'

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ScenarioFormatError) as info:
        load_scenario(str(broken))
    assert info.value.field == 'document'

    with pytest.raises(ScenarioFormatError) as info:
        load_scenario(scenario_file("eigenstate_family"))
    assert info.value.field == 'family'


def test_settings_tolerances_fill_gaps(pointer_equal):
    loaded = parse_scenario(copy.deepcopy(pointer_equal.document), {'check_tol': 1e-6, 'bin_tol': 1e-7})
    assert loaded.tolerances == {'check_tol': 1e-6, 'bin_tol': 1e-7}


def _assert_same_scenario(reloaded, scn, rho):
    H = scn.hamiltonian
    loaded = reloaded.scenario
    np.testing.assert_array_equal(loaded.process, scn.process)
    np.testing.assert_array_equal(reloaded.state.matrix, rho.matrix)
    assert (loaded.theta0, loaded.theta1) == (scn.theta0, scn.theta1)
    assert loaded.hamiltonian.n_outcomes == H.n_outcomes
    np.testing.assert_allclose(loaded.hamiltonian.eigenvalues, H.eigenvalues, atol=1e-12)
    for P, Q in zip(loaded.hamiltonian.projections, H.projections):
        np.testing.assert_allclose(P, Q, atol=1e-10)
    for mine, theirs in ((loaded.scheme0, scn.scheme0), (loaded.scheme1, scn.scheme1)):
        np.testing.assert_array_equal(mine.coupling, theirs.coupling)
        np.testing.assert_array_equal(mine.xi.amplitudes, theirs.xi.amplitudes)
        for Z, Y in zip(mine.pointer.projections, theirs.pointer.projections):
            np.testing.assert_array_equal(Z, Y)
        np.testing.assert_allclose(mine.probe_hamiltonian.matrix(), theirs.probe_hamiltonian.matrix(), atol=1e-12)


@pytest.mark.parametrize("mode", ['eigenstate-xi', 'pointer-equal', 'weak-conservation-family'])
@pytest.mark.parametrize("index", range(4))
def test_generated_scenarios_survive_a_file_round_trip(tmp_path, mode, index):
    cfg = SweepConfig(mode=mode, master_seed=11, count=4, system_dims=(2, 3), probe_max_dim=3)
    scn, rho, _ = generate_scenario(cfg, index)
    document = scenario_document(scn, rho, {'bin_tol': 1e-8}, label=f"{mode}_{index}")
    path = tmp_path / "generated.json"
    digest = write_scenario(document, str(path))
    reloaded = load_scenario(str(path))
    assert reloaded.digest == digest
    assert reloaded.tolerances == {'bin_tol': 1e-8}
    assert not reloaded.trivial_probes
    _assert_same_scenario(reloaded, scn, rho)
    assert average_total_work(extended_tpm(reloaded.scenario, reloaded.state)) == pytest.approx(
        average_total_work(extended_tpm(scn, rho)), abs=1e-10)
    assert total_unmeasured_work(reloaded.scenario, reloaded.state) == pytest.approx(
        total_unmeasured_work(scn, rho), abs=1e-10)


def test_scenario_document_keeps_padding_and_apparatus_states(tmp_path, padded_three_outcome, counterexample):
    for loaded in (padded_three_outcome, counterexample):
        document = scenario_document(loaded.scenario, loaded.state, expected_fail=loaded.expected_fail)
        path = tmp_path / f"{loaded.label}.json"
        write_scenario(document, str(path))
        reloaded = load_scenario(str(path))
        _assert_same_scenario(reloaded, loaded.scenario, loaded.state)
        assert reloaded.expected_fail == loaded.expected_fail
    assert document['probes'][0]['xi'] == [0.7071067811865476, 0.7071067811865476]
    assert document['probes'][1]['xi'] == [1.0, 0.0]
    padded = scenario_document(padded_three_outcome.scenario, padded_three_outcome.state)
    assert padded['system']['padding_energies'] == [2.0]
    assert 'tolerances' not in padded
