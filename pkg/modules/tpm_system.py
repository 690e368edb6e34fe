# modules/tpm_system.py
# joint table: m, n, w, p (one row per outcome pair)
# work distribution: w, p (sorted by w, attrs['bin_tol'])
import logging

import numpy as np
import pandas as pd

import defaults
from modules.errors import DimensionMismatchError, InvalidStateError
from modules.hilbert_core import ComplexMatrix, DensityOperator, dagger, real_expectation, require_unitary
from modules.observables import HermitianObservable, expectation, heisenberg, luders_channel

logger = logging.getLogger(__name__)

JOINT_COLUMNS = ['m', 'n', 'w', 'p']


def _check_process(H: HermitianObservable, V, rho: DensityOperator = None) -> ComplexMatrix:
    V = require_unitary(V, "process unitary")
    if V.shape[0] != H.dim:
        raise DimensionMismatchError(f"process unitary has dimension {V.shape[0]}, Hamiltonian {H.dim}")
    if rho is not None and rho.dim != H.dim:
        raise DimensionMismatchError(f"state has dimension {rho.dim}, Hamiltonian {H.dim}")
    return V


def validate_probability_table(table: pd.DataFrame, what: str = "table"):
    p = table['p']
    if ((p < -1e-12) | (p > 1 + 1e-12)).any():
        raise InvalidStateError(f"{what} has probabilities outside [0, 1]")
    total = float(p.sum())
    if abs(total - 1.0) > defaults.NORMALIZATION_TOL:
        raise InvalidStateError(f"{what} probabilities sum to {total:.15g}")


def unmeasured_work(H: HermitianObservable, V, rho: DensityOperator) -> float:
    """tr[(V^dagger H V - H) rho]"""
    V = _check_process(H, V, rho)
    Hm = H.matrix()
    return expectation(heisenberg(V, Hm) - Hm, rho)


def tpm_joint(H: HermitianObservable, V, rho: DensityOperator) -> pd.DataFrame:
    """p(m, n) = tr[P_n V P_m rho P_m V^dagger P_n] with w = eps_n - eps_m, zero rows kept."""
    V = _check_process(H, V, rho)
    rows = []
    for m, P_m in enumerate(H.projections):
        evolved = V @ (P_m @ rho.matrix @ P_m) @ dagger(V)
        for n, P_n in enumerate(H.projections):
            p = real_expectation(np.trace(P_n @ evolved), "joint probability")
            rows.append({'m': m, 'n': n, 'w': H.eigenvalues[n] - H.eigenvalues[m], 'p': p})
    table = pd.DataFrame(rows, columns=JOINT_COLUMNS)
    validate_probability_table(table, "joint table")
    logger.debug(f"-> joint table over {H.n_outcomes} outcomes, total p = {table['p'].sum():.15g}")
    return table


def work_distribution(table: pd.DataFrame, bin_tol: float = defaults.BIN_TOL, value_column: str = 'w') -> pd.DataFrame:
    """
    Sums probabilities of rows whose work values coincide.

    Values are sorted and chained into one bin while consecutive gaps stay
    within bin_tol * max(1, max|w|); the bin's work value is the
    probability-weighted mean. Bins with total probability below 1e-15 are
    dropped.
    """
    frame = (table[[value_column, 'p']]
             .rename(columns={value_column: 'w'})
             .sort_values('w', kind='mergesort')
             .reset_index(drop=True))
    if frame.empty:
        result = pd.DataFrame(columns=['w', 'p'])
        result.attrs['bin_tol'] = bin_tol
        return result

    scale = max(1.0, float(frame['w'].abs().max()))
    frame['bin'] = (frame['w'].diff() > bin_tol * scale).cumsum()
    frame['weight'] = frame['p'].clip(lower=0.0)
    frame['weighted_w'] = frame['w'] * frame['weight']

    grouped = frame.groupby('bin', sort=True).agg(
        p=('p', 'sum'), weight=('weight', 'sum'), weighted_w=('weighted_w', 'sum'), mean_w=('w', 'mean'))
    has_weight = grouped['weight'] > 0
    representative = grouped['mean_w'].copy()
    representative[has_weight] = grouped.loc[has_weight, 'weighted_w'] / grouped.loc[has_weight, 'weight']

    result = pd.DataFrame({'w': representative.to_numpy(), 'p': grouped['p'].to_numpy()})
    result = result[result['p'] >= defaults.ZERO_PROBABILITY].reset_index(drop=True)
    result.attrs['bin_tol'] = bin_tol
    return result


def average_work(dist: pd.DataFrame) -> float:
    return float((dist['w'] * dist['p']).sum())


def average_work_closed_form(H: HermitianObservable, V, rho: DensityOperator) -> float:
    """tr[(V^dagger H V - H) L(rho)] with L the Lüders channel of H."""
    V = _check_process(H, V, rho)
    Hm = H.matrix()
    dephased = luders_channel(H, rho.matrix)
    return real_expectation(np.trace((heisenberg(V, Hm) - Hm) @ dephased), "average work")


def first_law_gap(H: HermitianObservable, V, rho: DensityOperator) -> float:
    """<w> - W; zero whenever [H, rho] = 0."""
    return average_work_closed_form(H, V, rho) - unmeasured_work(H, V, rho)


def first_outcome_marginal(table: pd.DataFrame) -> pd.Series:
    return table.groupby('m', sort=True)['p'].sum()


def second_outcome_marginal(table: pd.DataFrame) -> pd.Series:
    return table.groupby('n', sort=True)['p'].sum()


def compare_distributions(a: pd.DataFrame, b: pd.DataFrame, tol: float = defaults.BIN_TOL) -> float:
    """
    Largest bin-wise probability difference between two work distributions.

    Both supports are pooled and re-binned with the larger of their bin
    tolerances (and `tol`), so a work value present on one side only counts
    with its full probability.
    """
    bin_tol = max(a.attrs.get('bin_tol', defaults.BIN_TOL), b.attrs.get('bin_tol', defaults.BIN_TOL), tol)
    pooled = pd.concat([a[['w', 'p']], b[['w', 'p']].assign(p=-b['p'])], ignore_index=True)
    if pooled.empty:
        return 0.0
    pooled = pooled.sort_values('w', kind='mergesort').reset_index(drop=True)
    scale = max(1.0, float(pooled['w'].abs().max()))
    pooled['bin'] = (pooled['w'].diff() > bin_tol * scale).cumsum()
    return float(pooled.groupby('bin')['p'].sum().abs().max())
