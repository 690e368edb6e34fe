# reports/documents.py
import json
import logging
import math
import os
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

import defaults
from modules.checks import CheckReport

logger = logging.getLogger(__name__)


def _clean(value):
    """Plain JSON values; NaN and inf become None."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def frame_records(frame: pd.DataFrame) -> list:
    return _clean(frame.to_dict(orient='records'))


def build_report_document(command: str, label: str, digest: str, reports: Sequence[CheckReport] = (),
                          tables: Optional[Dict[str, pd.DataFrame]] = None, extra: Optional[Dict] = None) -> Dict:
    document = {
        'version': defaults.REPORT_VERSION,
        'command': command,
        'label': label,
        'scenario_digest': digest,
        'checks': [r.as_dict() for r in reports],
        'tables': {name: frame_records(frame) for name, frame in (tables or {}).items()},
    }
    document.update(extra or {})
    return _clean(document)


def write_report_document(document: Dict, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(document, f, indent=2, allow_nan=False)
        f.write('\n')
    logger.info(f"-> report saved to {path}")
    return path
