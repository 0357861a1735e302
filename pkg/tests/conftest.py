"""Configuration for the pytest test suite."""

from __future__ import annotations

from typing import TYPE_CHECKING

import pytest

from fracheat.core.harness import build_problem
from fracheat.core.spectral import build_basis

if TYPE_CHECKING:
    from collections.abc import Iterator

    from fracheat.core.spectral import EigenBasis


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption("--run-slow", action="store_true", default=False, help="Run full Monte Carlo reproductions.")


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def _clean_environment(monkeypatch: pytest.MonkeyPatch) -> Iterator[None]:
    """Keep the caller's SPDE_* variables and cached problems out of the tests."""
    for name in ("SPDE_SEED", "SPDE_THREADS", "SPDE_OUTPUT_DIR"):
        monkeypatch.delenv(name, raising=False)
    yield
    build_problem.cache_clear()


@pytest.fixture
def basis8() -> EigenBasis:
    """Eight-mode basis on the default grid."""
    return build_basis(8)
