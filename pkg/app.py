# app.py
"""
Command-line entry point.

    python app.py run-tpm      --scenario FILE [--out DIR] [--format csv|doc]
    python app.py run-extended --scenario FILE [--out DIR] [--format csv|doc]
    python app.py verify       --scenario FILE [--checks a,b,...] [--tol X] [--seed N]
    python app.py sweep        --mode MODE --seed N --count K [--system-dims 2-4] [--probe-max-dim 4]

Exit codes: 0 success, 1 a check failed that the scenario did not declare as
expected to fail, 2 invalid input or configuration.
"""
import argparse
import logging
import os
import sys
from typing import List, Optional

import defaults
from modules.checks import ScenarioVerifier, reports_frame
from modules.config import Settings, load_settings
from modules.data_loader import ScenarioFile, load_scenario, read_document, read_tolerances
from modules.errors import TPMError
from modules.sweep import (SweepConfig, export_scenario, failing_indices, family_config, parse_dim_range, run_sweep,
                          summarize)
from modules.tpm_extended import (average_total_work, average_total_work_closed_form, extended_tpm, marginal_system,
                                  total_unmeasured_work, total_work_decomposition, total_work_distribution)
from modules.tpm_system import (average_work, average_work_closed_form, first_law_gap, tpm_joint, unmeasured_work,
                                work_distribution)
from reports.documents import build_report_document, write_report_document
from reports.tables import (write_extended_table, write_joint_table, write_sweep_table,
                            write_work_distribution)

logger = logging.getLogger("tpm")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tpm", description="Two-point measurement work statistics with explicit measurement probes.")
    commands = parser.add_subparsers(dest="command", required=True)

    def scenario_command(name: str, help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--scenario", required=True, help="scenario JSON file")
        sub.add_argument("--out", help="output directory (default: TPM_OUTPUT_DIR or ./output)")
        sub.add_argument("--tol", type=float, help="check tolerance, overrides the scenario and environment")
        sub.add_argument("--format", choices=["csv", "doc"], default="csv",
                         help="csv: tables as CSV next to the report; doc: tables inside the report")
        return sub

    scenario_command("run-tpm", "system-only two-point measurement")
    scenario_command("run-extended", "two-point measurement through two probes")
    verify = scenario_command("verify", "run verification checks on a scenario or a scenario family")
    verify.add_argument("--checks", help=f"comma-separated subset of: {', '.join(defaults.CHECK_NAMES)}")
    verify.add_argument("--seed", type=int, default=0, help="seed for sampled states and processes")
    verify.add_argument("--export-failures", action="store_true",
                        help="family documents: write each failing member as a scenario file")

    sweep = commands.add_parser("sweep", help="randomized property sweep")
    sweep.add_argument("--mode", choices=defaults.SWEEP_MODES, default="eigenstate-xi")
    sweep.add_argument("--seed", type=int, default=0, help="master seed")
    sweep.add_argument("--count", type=int, default=100)
    sweep.add_argument("--system-dims", default="2-4", help="inclusive range, e.g. 2-4")
    sweep.add_argument("--probe-max-dim", type=int, default=4)
    sweep.add_argument("--workers", type=int, help="threads (default: TPM_SWEEP_WORKERS or 1)")
    sweep.add_argument("--tol", type=float)
    sweep.add_argument("--out", help="output directory")
    sweep.add_argument("--format", choices=["csv", "doc"], default="csv")
    sweep.add_argument("--export-failures", action="store_true",
                       help="write each failing scenario to OUT/failing/ as a scenario file")
    return parser


def _resolve(args, settings: Settings, loaded: Optional[ScenarioFile] = None) -> Settings:
    """CLI flag > scenario tolerances > environment > defaults."""
    if loaded is not None:
        settings = settings.with_tolerances(**loaded.tolerances)
    return settings.with_tolerances(check_tol=args.tol)


def _out_dir(args, settings: Settings) -> str:
    path = args.out or settings.output_dir
    os.makedirs(path, exist_ok=True)
    return path


def _base_name(loaded: ScenarioFile, args) -> str:
    return loaded.label or os.path.splitext(os.path.basename(args.scenario))[0]


def cmd_run_tpm(args, settings: Settings) -> int:
    loaded = load_scenario(args.scenario, settings_tolerances=_env_tolerances(settings))
    settings = _resolve(args, settings, loaded)
    scn, rho = loaded.scenario, loaded.state
    H, V = scn.hamiltonian, scn.process

    joint = tpm_joint(H, V, rho)
    dist = work_distribution(joint, settings.bin_tol)
    summary = {
        'average_work': average_work(dist),
        'average_work_closed_form': average_work_closed_form(H, V, rho),
        'unmeasured_work': unmeasured_work(H, V, rho),
        'first_law_gap': first_law_gap(H, V, rho),
    }
    out = _out_dir(args, settings)
    name = _base_name(loaded, args)
    tables = {}
    if args.format == "csv":
        write_joint_table(joint, os.path.join(out, f"{name}_joint.csv"))
        write_work_distribution(dist, os.path.join(out, f"{name}_distribution.csv"))
    else:
        tables = {'joint': joint, 'distribution': dist}
    document = build_report_document("run-tpm", loaded.label, loaded.digest, tables=tables,
                                     extra={'summary': summary})
    write_report_document(document, os.path.join(out, f"{name}_tpm_report.json"))
    return EXIT_OK


def cmd_run_extended(args, settings: Settings) -> int:
    loaded = load_scenario(args.scenario, settings_tolerances=_env_tolerances(settings))
    settings = _resolve(args, settings, loaded)
    scn, rho = loaded.scenario, loaded.state
    H, V = scn.hamiltonian, scn.process

    table = extended_tpm(scn, rho)
    total_dist = total_work_distribution(table, settings.bin_tol)
    joint = tpm_joint(H, V, rho)
    system_dist = work_distribution(joint, settings.bin_tol)
    if not table.eigenstate_probes:
        logger.warning("-> probe state is not an energy eigenstate; outcomes come from the branched protocol")

    summary = {
        'eigenstate_probes': table.eigenstate_probes,
        'trivial_probes': loaded.trivial_probes,
        'average_total_work': average_total_work(table),
        'average_total_work_closed_form': average_total_work_closed_form(scn, rho),
        'total_unmeasured_work': total_unmeasured_work(scn, rho),
        'average_work': average_work(system_dist),
        'unmeasured_work': unmeasured_work(H, V, rho),
        'marginal_deviation': float((marginal_system(table)['p'] - joint['p']).abs().max()),
        'distributions_identical': bool(total_dist.equals(system_dist)),
    }
    if scn.xi_eigenstates:
        summary['total_work_decomposition'] = total_work_decomposition(scn, rho)

    out = _out_dir(args, settings)
    name = _base_name(loaded, args)
    tables = {}
    if args.format == "csv":
        write_extended_table(table, os.path.join(out, f"{name}_extended.csv"))
        write_work_distribution(total_dist, os.path.join(out, f"{name}_total_distribution.csv"), value_column='W')
        write_joint_table(joint, os.path.join(out, f"{name}_joint.csv"))
        write_work_distribution(system_dist, os.path.join(out, f"{name}_distribution.csv"))
    else:
        tables = {'extended': table.frame.drop(columns=['w']), 'total_distribution': total_dist,
                  'joint': joint, 'distribution': system_dist}
    document = build_report_document("run-extended", loaded.label, loaded.digest, tables=tables,
                                     extra={'summary': summary})
    write_report_document(document, os.path.join(out, f"{name}_extended_report.json"))
    return EXIT_OK


def _selected_checks(text: Optional[str]) -> List[str]:
    if not text:
        return list(defaults.CHECK_NAMES)
    names = [n.strip() for n in text.split(',') if n.strip()]
    unknown = [n for n in names if n not in defaults.CHECK_NAMES]
    if unknown:
        raise TPMError(f"unknown checks {unknown}; choose from {', '.join(defaults.CHECK_NAMES)}")
    return names


def cmd_verify(args, settings: Settings) -> int:
    document = read_document(args.scenario)
    if 'family' in document:
        settings = _resolve(args, settings.with_tolerances(**read_tolerances(document)))
        cfg = family_config(document, {'tol': settings.check_tol, 'bin_tol': settings.bin_tol,
                                       'degeneracy_tol': settings.degeneracy_tol, 'workers': settings.sweep_workers})
        return _finish_sweep(cfg, args, settings)

    loaded = load_scenario(args.scenario, settings_tolerances=_env_tolerances(settings))
    settings = _resolve(args, settings, loaded)
    verifier = ScenarioVerifier(loaded.scenario, loaded.state, settings.check_tol, seed=args.seed,
                                expected_fail=loaded.expected_fail, bin_tol=settings.bin_tol)
    reports = verifier.run(_selected_checks(args.checks))

    out = _out_dir(args, settings)
    name = _base_name(loaded, args)
    extra = {'trivial_probes': loaded.trivial_probes, 'check_tol': settings.check_tol, 'bin_tol': settings.bin_tol}
    tables = {'checks': reports_frame(reports)} if args.format == "doc" else {}
    document = build_report_document("verify", loaded.label, loaded.digest, reports, tables, extra)
    write_report_document(document, os.path.join(out, f"{name}_verify_report.json"))
    return EXIT_OK if all(r.acceptable for r in reports) else EXIT_CHECK_FAILED


def _finish_sweep(cfg: SweepConfig, args, settings: Settings) -> int:
    results = run_sweep(cfg)
    summary = summarize(cfg, results)
    out = _out_dir(args, settings)
    stem = f"sweep_{cfg.mode}_{cfg.master_seed}"
    tables = {}
    if args.format == "csv":
        write_sweep_table(results, os.path.join(out, f"{stem}.csv"))
    else:
        tables = {'sweep': results}
    document = build_report_document("sweep", cfg.mode, "", tables=tables, extra={'summary': summary})
    write_report_document(document, os.path.join(out, f"{stem}_summary.json"))
    for name, counts in summary['checks'].items():
        logger.info(f"-> {name}: {counts['passed']}/{counts['total']} passed")
    failing = failing_indices(results)
    if failing and args.export_failures:
        for index in failing:
            export_scenario(cfg, index, os.path.join(out, "failing", f"{stem}_{index}.json"))
        logger.warning(f"-> wrote {len(failing)} failing scenario(s) to {os.path.join(out, 'failing')}")
    return EXIT_CHECK_FAILED if failing else EXIT_OK


def cmd_sweep(args, settings: Settings) -> int:
    settings = _resolve(args, settings)
    cfg = SweepConfig(mode=args.mode, master_seed=args.seed, count=args.count,
                      system_dims=parse_dim_range(args.system_dims), probe_max_dim=args.probe_max_dim,
                      tol=settings.check_tol, bin_tol=settings.bin_tol, degeneracy_tol=settings.degeneracy_tol,
                      workers=args.workers or settings.sweep_workers)
    return _finish_sweep(cfg, args, settings)


def _env_tolerances(settings: Settings) -> dict:
    return {'degeneracy_tol': settings.degeneracy_tol, 'bin_tol': settings.bin_tol, 'check_tol': settings.check_tol}


COMMANDS = {
    "run-tpm": cmd_run_tpm,
    "run-extended": cmd_run_extended,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


# Main Application
def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = load_settings()
    except TPMError as e:
        logging.basicConfig(level=logging.INFO, format="%(message)s")
        logger.error(f"Configuration error: {e}")
        return EXIT_INVALID
    logging.basicConfig(level=getattr(logging, settings.log_level, logging.INFO), format="%(message)s")

    try:
        return COMMANDS[args.command](args, settings)
    except TPMError as e:
        logger.error(f"Error: {e}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
