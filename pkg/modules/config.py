# modules/config.py
import os
from dataclasses import dataclass, replace
from typing import Optional

from dotenv import load_dotenv

import defaults
from modules.errors import ConfigurationError

# Load environment variables
load_dotenv(dotenv_path=os.path.join(os.path.dirname(__file__), '..', '.env'))


@dataclass(frozen=True)
class Settings:
    degeneracy_tol: float = defaults.DEGENERACY_TOL
    bin_tol: float = defaults.BIN_TOL
    check_tol: float = defaults.CHECK_TOL
    log_level: str = "INFO"
    sweep_workers: int = 1
    output_dir: str = "output"

    def with_tolerances(self, degeneracy_tol: Optional[float] = None, bin_tol: Optional[float] = None,
                        check_tol: Optional[float] = None) -> "Settings":
        """Returns a copy with the given tolerances replaced; None keeps the current value."""
        updates = {k: v for k, v in
                   {'degeneracy_tol': degeneracy_tol, 'bin_tol': bin_tol, 'check_tol': check_tol}.items()
                   if v is not None}
        for name, value in updates.items():
            _require_positive(name, value)
        return replace(self, **updates)


def _require_positive(name: str, value: float):
    if not value > 0:
        raise ConfigurationError(f"{name} must be positive, got {value!r}")


def _env_float(name: str, fallback: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return fallback
    try:
        value = float(raw)
    except ValueError:
        raise ConfigurationError(f"{name} is not a number: {raw!r}") from None
    _require_positive(name, value)
    return value


def _env_int(name: str, fallback: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return fallback
    try:
        value = int(raw)
    except ValueError:
        raise ConfigurationError(f"{name} is not an integer: {raw!r}") from None
    _require_positive(name, value)
    return value


def load_settings() -> Settings:
    """Reads TPM_* variables from the environment (and .env), falling back to defaults.py."""
    return Settings(
        degeneracy_tol=_env_float("TPM_DEGENERACY_TOL", defaults.DEGENERACY_TOL),
        bin_tol=_env_float("TPM_BIN_TOL", defaults.BIN_TOL),
        check_tol=_env_float("TPM_CHECK_TOL", defaults.CHECK_TOL),
        log_level=os.getenv("TPM_LOG_LEVEL", "INFO").upper(),
        sweep_workers=_env_int("TPM_SWEEP_WORKERS", 1),
        output_dir=os.getenv("TPM_OUTPUT_DIR", "output"),
    )
