import math

import pytest

from srlaser.params import SystemParams, sr87_params


@pytest.fixture
def paper():
    """87Sr example at the optimal pump rate."""
    return sr87_params()


def desk_params(n_atoms=2, **changes):
    """Rates rescaled so gamma = 1, kappa dominant, C = 0.15."""
    base = dict(
        n_atoms=n_atoms, gamma=1.0, pump=50.0, t2_inv=10.0,
        kappa=1e4, rabi=math.sqrt(0.15 * 1e4),
    )
    base.update(changes)
    return SystemParams(**base)


@pytest.fixture
def desk():
    return desk_params


# One line per acceptance criterion, filled by test_acceptance.py.
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
