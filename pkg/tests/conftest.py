"""
Shared fixtures: validity backends, the corpus and a clean settings object
per test.
"""

import pytest

from core.corpus.registry import Corpus
from core.exceptions import SolverError
from core.logic.solvers import EnumerationSolver, make_backend
from shared.config.settings import reload_settings


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Every test starts from default settings, whatever the environment says"""
    for name in ("CARDKIT_BACKEND", "CARDKIT_SOLVER", "CARDKIT_LOG_LEVEL", "CARDKIT_MAX_ITER"):
        monkeypatch.delenv(name, raising=False)
    settings = reload_settings()
    yield settings
    reload_settings()


@pytest.fixture
def enumeration():
    return EnumerationSolver(int_domain=(-4, 4), param_domain=(-3, 3), budget=200_000)


@pytest.fixture(scope="session")
def solver():
    """SMT backend; tests needing it are skipped when no solver is installed"""
    try:
        return make_backend(kind="solver")
    except SolverError as e:
        pytest.skip(str(e))


@pytest.fixture(scope="session")
def corpus():
    return Corpus()


@pytest.fixture(scope="session")
def bank(corpus):
    return corpus.card("bank_account")


@pytest.fixture(scope="session")
def bank_ops(corpus, bank):
    return corpus.ops("bank_account", bank)


@pytest.fixture(scope="session")
def joint(corpus):
    return corpus.card("joint_account")
