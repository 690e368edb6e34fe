# modules/checks.py
"""
Verification reports for measurement schemes and extended scenarios.

Every check returns a CheckReport whose `passed` flag agrees with
`max_deviation <= tol` (weak conservation compares the largest reachable
probe work instead). `precondition_status` is one of PRECONDITION_*.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

import defaults
from modules.errors import TPMError
from modules.hilbert_core import DensityOperator, random_density, random_unitary
from modules.measurement_scheme import (check_full_energy_conservation, check_weak_energy_conservation,
                                        commutator_norm, dilation_deviation, effective_work_operator,
                                        measurement_work, satisfies_pointer_equality)
from modules.observables import luders_channel
from modules.oracle import brute_force_outcomes
from modules.tpm_extended import (ExtendedScenario, average_total_work, average_total_work_closed_form,
                                  extended_tpm, marginal_system, total_unmeasured_work, total_work_decomposition,
                                  total_work_distribution)
from modules.tpm_system import (average_work, compare_distributions, first_law_gap, tpm_joint, unmeasured_work,
                                work_distribution)

logger = logging.getLogger(__name__)

PRECONDITION_HELD = "held"
PRECONDITION_VIOLATED = "violated"
PRECONDITION_COUNTEREXAMPLE = "counterexample_mode"
PRECONDITION_NONE = "not_applicable"

OUTCOME_KEYS = ['m', 'mu', 'nu', 'n', 'mu2', 'nu2']


@dataclass
class CheckReport:
    name: str
    passed: bool
    max_deviation: float
    precondition_status: str = PRECONDITION_NONE
    details: Dict = field(default_factory=dict)
    expected_fail: bool = False

    @property
    def acceptable(self) -> bool:
        """A passing check, or a failing one the scenario declared as expected."""
        return self.passed or self.expected_fail

    def as_dict(self) -> Dict:
        return {'name': self.name, 'pass': bool(self.passed), 'max_deviation': _finite_or_none(self.max_deviation),
                'precondition_status': self.precondition_status, 'expected_fail': self.expected_fail,
                'details': self.details}


def _finite_or_none(value: float) -> Optional[float]:
    value = float(value)
    return value if np.isfinite(value) else None


def _schemes(scn: ExtendedScenario):
    return (scn.scheme0, scn.scheme1)


def _pointer_equal(scn: ExtendedScenario, tol: float) -> bool:
    return all(satisfies_pointer_equality(s, tol) for s in _schemes(scn))


# --- Scheme-level checks, run on both probes ---

def check_dilation(scn: ExtendedScenario, tol: float = defaults.CHECK_TOL) -> CheckReport:
    deviations = [dilation_deviation(s, scn.hamiltonian) for s in _schemes(scn)]
    worst = max(deviations)
    return CheckReport("dilation", worst <= tol, worst, details={'per_probe': deviations})


def check_weak_conservation(scn: ExtendedScenario, tol: float = defaults.CHECK_TOL) -> CheckReport:
    H = scn.hamiltonian
    per_probe, reachable, vanishes = [], [], []
    for s in _schemes(scn):
        if s.xi_energy is None:
            return CheckReport("weak_conservation", False, float('nan'), PRECONDITION_VIOLATED,
                               {'reason': "probe state is not an energy eigenstate"})
        result = check_weak_energy_conservation(s, H, tol)
        per_probe.append({str(m): w for m, w in result.probe_work.items()})
        reachable.extend(abs(w) for m, w in result.probe_work.items() if H.rank(m) > 0)
        vanishes.append(result.operator_vanishes)
    worst = max(reachable, default=0.0)
    return CheckReport("weak_conservation", worst <= tol, worst, PRECONDITION_HELD,
                       {'probe_work': per_probe, 'effective_operator_vanishes': vanishes})


def check_full_conservation(scn: ExtendedScenario, tol: float = defaults.CHECK_TOL) -> CheckReport:
    norms = [commutator_norm(s, scn.hamiltonian) for s in _schemes(scn)]
    passed = all(check_full_energy_conservation(s, scn.hamiltonian, tol) for s in _schemes(scn))
    return CheckReport("full_conservation", passed, max(norms), details={'commutator_max_abs': norms})


def check_restriction_identity(scn: ExtendedScenario, tol: float = defaults.CHECK_TOL) -> CheckReport:
    """Gamma_xi(U^dagger H_tot U - H_tot) against sum_m (lambda_m - lambda_0) P_m on both probes."""
    deviations = []
    for s in _schemes(scn):
        if s.xi_energy is None:
            return CheckReport("restriction_identity", False, float('nan'), PRECONDITION_VIOLATED,
                               {'reason': "probe state is not an energy eigenstate"})
        deviations.append(effective_work_operator(s, scn.hamiltonian).deviation)
    worst = max(deviations)
    return CheckReport("restriction_identity", worst <= tol, worst, PRECONDITION_HELD, {'per_probe': deviations})


# --- Scenario-level checks ---

def check_self_consistency(scn: ExtendedScenario, rho: DensityOperator,
                           tol: float = defaults.CHECK_TOL) -> CheckReport:
    table = extended_tpm(scn, rho)
    marginal = marginal_system(table)
    joint = tpm_joint(scn.hamiltonian, scn.process, rho)
    deviation = float(np.max(np.abs(marginal['p'].to_numpy() - joint['p'].to_numpy())))
    status = PRECONDITION_HELD if table.eigenstate_probes else PRECONDITION_COUNTEREXAMPLE
    return CheckReport("self_consistency", deviation <= tol, deviation, status,
                       {'eigenstate_probes': table.eigenstate_probes})


def check_first_law(scn: ExtendedScenario, rho: DensityOperator, tol: float = defaults.CHECK_TOL) -> CheckReport:
    """
    Table average of total work against W_tot. The system-only gap <w> - W is
    reported beside it; it need not vanish when [H, rho] != 0. Trivial probes
    (H_A = 0) are pointer-equal, so with them this check passes even when
    [H, rho] != 0, and the system gap is where that violation shows up.
    """
    table = extended_tpm(scn, rho)
    average = average_total_work(table)
    total = total_unmeasured_work(scn, rho)
    deviation = abs(average - total)
    status = PRECONDITION_HELD if _pointer_equal(scn, tol) else PRECONDITION_VIOLATED
    H, V = scn.hamiltonian, scn.process
    details = {
        'average_total_work': average,
        'average_total_work_closed_form': average_total_work_closed_form(scn, rho),
        'total_unmeasured_work': total,
        'system_average_work': average_work(work_distribution(tpm_joint(H, V, rho))),
        'system_unmeasured_work': unmeasured_work(H, V, rho),
        'system_first_law_gap': first_law_gap(H, V, rho),
        'total_work_decomposition': total_work_decomposition(scn, rho),
    }
    return CheckReport("first_law", deviation <= tol, deviation, status, details)


def check_strong_repeatability(scn: ExtendedScenario, rho: DensityOperator,
                               tol: float = defaults.CHECK_TOL) -> CheckReport:
    """W_tot on rho against W_tot on the Lüders-dephased rho."""
    direct = total_unmeasured_work(scn, rho)
    dephased = total_unmeasured_work(scn, DensityOperator(luders_channel(scn.hamiltonian, rho.matrix)))
    deviation = abs(direct - dephased)
    status = PRECONDITION_HELD if _pointer_equal(scn, tol) else PRECONDITION_VIOLATED
    return CheckReport("strong_repeatability", deviation <= tol, deviation, status,
                       {'on_state': direct, 'on_dephased_state': dephased})


def check_distribution_equality(scn: ExtendedScenario, rho_samples: Sequence[DensityOperator],
                                tol: float = defaults.CHECK_TOL,
                                process_samples: Optional[Sequence[np.ndarray]] = None,
                                bin_tol: float = defaults.BIN_TOL) -> CheckReport:
    """
    Total work distribution against the system one for every (rho, V) sample,
    cross-checked with structural weak conservation on both probes and with
    the largest |W_meas| over the sampled states. Work values within `bin_tol`
    share a bin on both sides.
    """
    H = scn.hamiltonian
    processes = [scn.process] + list(process_samples or [])
    worst = 0.0
    for V in processes:
        sample_scn = scn if V is scn.process else _with_process(scn, V)
        for rho in rho_samples:
            system = work_distribution(tpm_joint(H, V, rho), bin_tol)
            total = total_work_distribution(extended_tpm(sample_scn, rho), bin_tol)
            worst = max(worst, compare_distributions(system, total, bin_tol))
    passed = worst <= tol

    eigenstates = scn.xi_eigenstates
    status = PRECONDITION_HELD if eigenstates and _pointer_equal(scn, tol) else PRECONDITION_VIOLATED
    details = {'samples': len(rho_samples) * len(processes), 'bin_tol': bin_tol}
    if eigenstates:
        structural = all(check_weak_energy_conservation(s, H, tol).holds for s in _schemes(scn))
        meas_work = max(abs(measurement_work(s, H, rho)) for s in _schemes(scn) for rho in rho_samples)
        work_vanishes = meas_work <= tol
        details.update({'structural_weak_conservation': structural, 'max_measurement_work': meas_work,
                        'measurement_work_vanishes': work_vanishes,
                        'three_way_agreement': passed == structural == work_vanishes})
        if not details['three_way_agreement']:
            logger.warning(f"-> distribution equality ({passed}), structural condition ({structural}) and "
                           f"measurement work ({work_vanishes}) disagree")
    return CheckReport("distribution_equality", passed, worst, status, details)


def check_oracle_agreement(scn: ExtendedScenario, rho: DensityOperator, tol: float = 1e-12) -> CheckReport:
    """extended_tpm against the brute-force enumerator, matched on the outcome sequence."""
    table = extended_tpm(scn, rho).frame
    oracle = brute_force_outcomes(scn, rho)
    merged = table.merge(oracle, on=OUTCOME_KEYS, suffixes=('', '_oracle'), how='outer', validate='one_to_one')
    if merged[['p', 'p_oracle']].isna().any().any():
        return CheckReport("oracle_agreement", False, float('nan'), details={'reason': "outcome sets differ"})
    p_gap = float((merged['p'] - merged['p_oracle']).abs().max())
    reached = merged['p'] > defaults.ZERO_PROBABILITY
    w_gap = float((merged.loc[reached, 'W'] - merged.loc[reached, 'W_oracle']).abs().max()) if reached.any() else 0.0
    deviation = max(p_gap, w_gap)
    return CheckReport("oracle_agreement", deviation <= tol, deviation,
                       details={'probability_gap': p_gap, 'work_gap': w_gap, 'rows': len(merged)})


def _with_process(scn: ExtendedScenario, V: np.ndarray) -> ExtendedScenario:
    return ExtendedScenario(scn.hamiltonian, V, scn.scheme0, scn.scheme1, scn.theta0, scn.theta1)


class ScenarioVerifier:
    """
    Runs a selection of checks on one scenario and initial state.
    Random states and processes for the sampled checks come from `seed`.
    """
    def __init__(self, scn: ExtendedScenario, rho: DensityOperator, tol: float = defaults.CHECK_TOL,
                 seed: int = 0, samples: int = 20, expected_fail: Iterable[str] = (),
                 bin_tol: float = defaults.BIN_TOL):
        self.scn = scn
        self.rho = rho
        self.tol = tol
        self.bin_tol = bin_tol
        self.seed = seed
        self.samples = samples
        self.expected_fail = set(expected_fail)

    def _sampled_states(self) -> List[DensityOperator]:
        children = np.random.SeedSequence(self.seed).spawn(self.samples)
        d = self.scn.hamiltonian.dim
        return [self.rho] + [random_density(d, np.random.default_rng(child)) for child in children]

    def _sampled_processes(self) -> List[np.ndarray]:
        children = np.random.SeedSequence([self.seed, 1]).spawn(max(1, self.samples // 4))
        d = self.scn.hamiltonian.dim
        return [random_unitary(d, np.random.default_rng(child)) for child in children]

    def _run_one(self, name: str) -> CheckReport:
        scn, rho, tol = self.scn, self.rho, self.tol
        if name == "dilation":
            return check_dilation(scn, tol)
        if name == "self_consistency":
            return check_self_consistency(scn, rho, tol)
        if name == "first_law":
            return check_first_law(scn, rho, tol)
        if name == "strong_repeatability":
            return check_strong_repeatability(scn, rho, tol)
        if name == "distribution_equality":
            return check_distribution_equality(scn, self._sampled_states(), tol, self._sampled_processes(),
                                               self.bin_tol)
        if name == "weak_conservation":
            return check_weak_conservation(scn, tol)
        if name == "full_conservation":
            return check_full_conservation(scn, tol)
        if name == "restriction_identity":
            return check_restriction_identity(scn, tol)
        if name == "oracle_agreement":
            return check_oracle_agreement(scn, rho, min(tol, 1e-12))
        raise TPMError(f"unknown check {name!r}; choose from {', '.join(defaults.CHECK_NAMES)}")

    def run(self, names: Optional[Iterable[str]] = None) -> List[CheckReport]:
        names = list(defaults.CHECK_NAMES if names is None else names)
        logger.info(f"Starting {len(names)} checks...")
        reports = []
        for name in names:
            report = self._run_one(name)
            report.expected_fail = name in self.expected_fail
            if report.passed:
                logger.info(f"-> {name}: pass (max deviation {report.max_deviation:.3e})")
            elif report.expected_fail:
                logger.warning(f"-> {name}: fail, declared as expected (max deviation {report.max_deviation:.3e})")
            else:
                logger.warning(f"-> {name}: FAIL (max deviation {report.max_deviation:.3e})")
            reports.append(report)
        logger.info("Checks finished.")
        return reports


def reports_frame(reports: Sequence[CheckReport]) -> pd.DataFrame:
    return pd.DataFrame([{'name': r.name, 'pass': r.passed, 'max_deviation': r.max_deviation,
                          'precondition_status': r.precondition_status, 'expected_fail': r.expected_fail}
                         for r in reports])
