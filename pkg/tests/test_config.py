# tests/test_config.py
import pytest

import defaults
from modules.config import Settings, load_settings
from modules.errors import ConfigurationError

ENV_NAMES = ["TPM_DEGENERACY_TOL", "TPM_BIN_TOL", "TPM_CHECK_TOL", "TPM_LOG_LEVEL", "TPM_SWEEP_WORKERS",
             "TPM_OUTPUT_DIR"]


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for name in ENV_NAMES:
        monkeypatch.delenv(name, raising=False)


def test_defaults_without_environment():
    settings = load_settings()
    assert settings == Settings()
    assert settings.check_tol == defaults.CHECK_TOL


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("TPM_CHECK_TOL", "1e-6")
    monkeypatch.setenv("TPM_SWEEP_WORKERS", "4")
    monkeypatch.setenv("TPM_LOG_LEVEL", "debug")
    monkeypatch.setenv("TPM_BIN_TOL", " ")
    settings = load_settings()
    assert settings.check_tol == 1e-6
    assert settings.sweep_workers == 4
    assert settings.log_level == "DEBUG"
    assert settings.bin_tol == defaults.BIN_TOL


@pytest.mark.parametrize("name, value", [("TPM_CHECK_TOL", "loose"), ("TPM_BIN_TOL", "-1e-9"),
                                         ("TPM_SWEEP_WORKERS", "2.5"), ("TPM_SWEEP_WORKERS", "0")])
def test_invalid_environment(monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(ConfigurationError):
        load_settings()


def test_with_tolerances_keeps_unset_values():
    settings = Settings().with_tolerances(check_tol=1e-8)
    assert settings.check_tol == 1e-8
    assert settings.bin_tol == defaults.BIN_TOL
    assert settings.with_tolerances() == settings
    with pytest.raises(ConfigurationError):
        settings.with_tolerances(bin_tol=0.0)
