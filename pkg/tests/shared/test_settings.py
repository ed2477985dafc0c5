"""
Settings loading, validation and command-line overrides.
"""

import pytest
from pydantic import ValidationError

from core.logic.solvers import EnumerationSolver, make_backend
from shared.config.settings import Settings, get_settings, override_settings, reload_settings


@pytest.mark.unit
def test_environment_prefix(monkeypatch):
    monkeypatch.setenv("CARDKIT_BACKEND", "enumeration")
    monkeypatch.setenv("CARDKIT_INT_MIN", "-2")
    monkeypatch.setenv("CARDKIT_INT_MAX", "2")
    settings = reload_settings()
    assert settings.backend == "enumeration"
    assert settings.int_domain == (-2, 2)
    backend = make_backend()
    assert isinstance(backend, EnumerationSolver)
    assert backend.int_values == (0, 1, -1, 2, -2)


@pytest.mark.unit
def test_overrides_ignore_missing_values():
    before = get_settings().max_iter
    settings = override_settings(max_iter=None, log_level="debug")
    assert settings.max_iter == before
    assert settings.log_level == "DEBUG"
    assert get_settings() is settings


@pytest.mark.unit
@pytest.mark.parametrize(
    "updates",
    [{"backend": "oracle"}, {"max_iter": 0}, {"int_min": 3, "int_max": 3}, {"log_format": "xml"}],
)
def test_invalid_settings(updates):
    with pytest.raises(ValidationError):
        Settings(**updates)
