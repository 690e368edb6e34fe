# tests/test_app.py
import copy
import json

import pandas as pd
import pytest

from app import EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_OK, main
from modules.data_loader import load_scenario, write_scenario


def _header(path):
    with open(path, encoding='utf-8') as f:
        return f.readline().strip()


def _report(path):
    with open(path, encoding='utf-8') as f:
        return json.load(f)


def test_run_tpm_writes_tables(tmp_path, scenario_file):
    code = main(["run-tpm", "--scenario", scenario_file("flat_probe_qubit"), "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert _header(tmp_path / "flat_probe_qubit_joint.csv") == "m,n,w,p"
    assert _header(tmp_path / "flat_probe_qubit_distribution.csv") == "w,p"
    joint = pd.read_csv(tmp_path / "flat_probe_qubit_joint.csv")
    assert joint['p'].sum() == pytest.approx(1.0)
    summary = _report(tmp_path / "flat_probe_qubit_tpm_report.json")['summary']
    assert summary['unmeasured_work'] == pytest.approx(-0.5)
    assert summary['first_law_gap'] == pytest.approx(0.5)


def test_run_extended_writes_tables(tmp_path, scenario_file):
    code = main(["run-extended", "--scenario", scenario_file("pointer_equal"), "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert _header(tmp_path / "pointer_equal_extended.csv") == "m,mu,nu,n,mu2,nu2,W,p"
    assert _header(tmp_path / "pointer_equal_total_distribution.csv") == "W,p"
    report = _report(tmp_path / "pointer_equal_extended_report.json")
    assert report['scenario_digest']
    summary = report['summary']
    assert summary['eigenstate_probes']
    assert summary['average_total_work'] == pytest.approx(1.0)
    assert summary['total_unmeasured_work'] == pytest.approx(1.0)
    assert not summary['distributions_identical']


def test_trivial_probes_give_identical_distributions(tmp_path, scenario_file):
    code = main(["run-extended", "--scenario", scenario_file("trivial_probes"), "--out", str(tmp_path)])
    assert code == EXIT_OK
    summary = _report(tmp_path / "trivial_probes_extended_report.json")['summary']
    assert summary['trivial_probes']
    assert summary['distributions_identical']
    total = (tmp_path / "trivial_probes_total_distribution.csv").read_text().splitlines()[1:]
    system = (tmp_path / "trivial_probes_distribution.csv").read_text().splitlines()[1:]
    assert total == system


def test_document_format_embeds_tables(tmp_path, scenario_file):
    code = main(["run-extended", "--scenario", scenario_file("counterexample_xi_plus"), "--out", str(tmp_path),
                 "--format", "doc"])
    assert code == EXIT_OK
    assert not list(tmp_path.glob("*.csv"))
    report = _report(tmp_path / "counterexample_xi_plus_extended_report.json")
    assert not report['summary']['eigenstate_probes']
    assert set(report['tables']) == {'extended', 'total_distribution', 'joint', 'distribution'}
    assert sum(row['p'] for row in report['tables']['extended']) == pytest.approx(1.0)


def test_verify_accepts_declared_failures(tmp_path, scenario_file):
    code = main(["verify", "--scenario", scenario_file("counterexample_xi_plus"), "--out", str(tmp_path)])
    assert code == EXIT_OK
    report = _report(tmp_path / "counterexample_xi_plus_verify_report.json")
    checks = {c['name']: c for c in report['checks']}
    assert not checks['self_consistency']['pass']
    assert checks['self_consistency']['expected_fail']
    assert checks['self_consistency']['max_deviation'] == pytest.approx(0.5)
    assert checks['weak_conservation']['max_deviation'] is None


def test_verify_fails_on_undeclared_failure(tmp_path, counterexample):
    document = copy.deepcopy(counterexample.document)
    document['expected_fail'] = []
    path = tmp_path / "undeclared.json"
    write_scenario(document, str(path))
    assert main(["verify", "--scenario", str(path), "--out", str(tmp_path)]) == EXIT_CHECK_FAILED


def test_verify_subset_and_tolerance(tmp_path, scenario_file):
    code = main(["verify", "--scenario", scenario_file("flat_probe_qubit"), "--out", str(tmp_path),
                 "--checks", "dilation,first_law", "--tol", "1e-8"])
    assert code == EXIT_OK
    report = _report(tmp_path / "flat_probe_qubit_verify_report.json")
    assert [c['name'] for c in report['checks']] == ["dilation", "first_law"]
    assert report['check_tol'] == 1e-8


def test_unknown_check_is_invalid(tmp_path, scenario_file):
    code = main(["verify", "--scenario", scenario_file("flat_probe_qubit"), "--out", str(tmp_path),
                 "--checks", "dilation,entropy"])
    assert code == EXIT_INVALID


def test_invalid_scenario_exits_with_two(tmp_path, flat_probe_qubit):
    document = copy.deepcopy(flat_probe_qubit.document)
    document['system']['process_unitary'] = [[1.0, 1.0], [0.0, 1.0]]
    path = tmp_path / "bad.json"
    write_scenario(document, str(path))
    assert main(["run-tpm", "--scenario", str(path), "--out", str(tmp_path)]) == EXIT_INVALID
    assert main(["run-extended", "--scenario", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == EXIT_INVALID


def test_invalid_environment_exits_with_two(tmp_path, scenario_file, monkeypatch):
    monkeypatch.setenv("TPM_CHECK_TOL", "tight")
    assert main(["run-tpm", "--scenario", scenario_file("flat_probe_qubit"), "--out", str(tmp_path)]) == EXIT_INVALID


def test_sweep_writes_results(tmp_path):
    code = main(["sweep", "--mode", "pointer-equal", "--seed", "9", "--count", "3", "--system-dims", "2-3",
                 "--probe-max-dim", "3", "--out", str(tmp_path)])
    assert code == EXIT_OK
    results = pd.read_csv(tmp_path / "sweep_pointer-equal_9.csv")
    assert results['seed'].tolist() == ["9:0", "9:1", "9:2"]
    summary = _report(tmp_path / "sweep_pointer-equal_9_summary.json")['summary']
    assert summary['checks']['first_law']['passed'] == 3


def test_sweep_rejects_bad_dimensions(tmp_path):
    code = main(["sweep", "--mode", "eigenstate-xi", "--count", "2", "--system-dims", "1-3", "--out", str(tmp_path)])
    assert code == EXIT_INVALID


def test_verify_runs_family_documents(tmp_path):
    path = tmp_path / "family.json"
    write_scenario({'version': 'tpm-scenario/1', 'label': 'small_family',
                    'family': {'mode': 'weak-conservation-family', 'seed': 3, 'count': 2,
                               'system_dims': [2, 2], 'probe_max_dim': 2}}, str(path))
    assert main(["verify", "--scenario", str(path), "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "sweep_weak-conservation-family_3.csv").exists()


def test_unknown_command_is_a_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["explode"])
    assert info.value.code == 2


def test_scenario_bin_tolerance_reaches_verify(tmp_path, pointer_equal):
    document = copy.deepcopy(pointer_equal.document)
    for probe in document['probes']:
        probe['probe_energies'] = [0.0, 1e-6]
    document['expected_fail'] = []
    path = tmp_path / "near_degenerate.json"
    write_scenario(document, str(path))
    args = ["verify", "--scenario", str(path), "--out", str(tmp_path), "--checks", "distribution_equality"]
    assert main(args) == EXIT_CHECK_FAILED

    document['tolerances'] = {'bin_tol': 1e-3}
    write_scenario(document, str(path))
    assert main(args) == EXIT_OK
    report = _report(tmp_path / "pointer_equal_verify_report.json")
    assert report['bin_tol'] == 1e-3
    assert report['checks'][0]['details']['bin_tol'] == 1e-3


def test_family_tolerances_reach_the_sweep(tmp_path):
    path = tmp_path / "family.json"
    write_scenario({'version': 'tpm-scenario/1', 'label': 'small_family', 'tolerances': {'bin_tol': 1e-7},
                    'family': {'mode': 'eigenstate-xi', 'seed': 4, 'count': 2,
                               'system_dims': [2, 2], 'probe_max_dim': 2}}, str(path))
    assert main(["verify", "--scenario", str(path), "--out", str(tmp_path)]) == EXIT_OK
    summary = _report(tmp_path / "sweep_eigenstate-xi_4_summary.json")['summary']
    assert summary['bin_tol'] == 1e-7


def test_sweep_exports_failing_scenarios(tmp_path, monkeypatch):
    monkeypatch.setattr("app.failing_indices", lambda results: [1])
    code = main(["sweep", "--mode", "eigenstate-xi", "--seed", "5", "--count", "2", "--system-dims", "2-2",
                 "--probe-max-dim", "2", "--out", str(tmp_path), "--export-failures"])
    assert code == EXIT_CHECK_FAILED
    assert [p.name for p in (tmp_path / "failing").glob("*.json")] == ["sweep_eigenstate-xi_5_1.json"]
    exported = load_scenario(str(tmp_path / "failing" / "sweep_eigenstate-xi_5_1.json"))
    assert exported.label == "eigenstate-xi_5_1"
