from functools import lru_cache

import pytest

from syktel.hamiltonians import build_hamiltonian_set, sample_couplings
from syktel.register import build_layout


@lru_cache(maxsize=None)
def _ham(n, seed):
    return build_hamiltonian_set(sample_couplings(n, seed), build_layout(n))


@pytest.fixture(scope="session")
def ham_factory():
    """Memoized (n, seed) -> HamiltonianSet, shared across the whole run."""
    return _ham


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # verdict lines collected by the acceptance battery, if it ran
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance battery")
        for line in lines:
            terminalreporter.write_line(line)
