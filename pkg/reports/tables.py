# reports/tables.py
import logging
import os

import pandas as pd

import defaults
from modules.tpm_extended import EXTENDED_COLUMNS, ExtendedOutcomeTable
from modules.tpm_system import JOINT_COLUMNS

logger = logging.getLogger(__name__)


def _write_csv(frame: pd.DataFrame, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    frame.to_csv(path, index=False, float_format=defaults.CSV_FLOAT_FORMAT)
    logger.info(f"-> {len(frame)} rows saved to {path}")
    return path


def write_joint_table(table: pd.DataFrame, path: str) -> str:
    """System TPM table with header m,n,w,p."""
    return _write_csv(table[JOINT_COLUMNS], path)


def write_extended_table(table: ExtendedOutcomeTable, path: str) -> str:
    """Extended outcome table with header m,mu,nu,n,mu2,nu2,W,p."""
    return _write_csv(table.frame[EXTENDED_COLUMNS], path)


def write_work_distribution(dist: pd.DataFrame, path: str, value_column: str = 'w') -> str:
    """Binned distribution; the work column is named `w` for system work and `W` for total work."""
    return _write_csv(dist[['w', 'p']].rename(columns={'w': value_column}), path)


def write_sweep_table(results: pd.DataFrame, path: str) -> str:
    return _write_csv(results, path)
