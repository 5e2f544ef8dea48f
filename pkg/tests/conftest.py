import sys

import numpy as np
import pytest

from latticedn.edge_ode import SymmetricPotential


def random_potentials(region, rng, modes=2, scale=2.0):
    """Independent random symmetric potentials on every interior edge."""
    return {
        e: SymmetricPotential.from_coefficients(rng.uniform(-scale, scale, modes + 1)) for e in region.interior_edges
    }


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for mod in list(sys.modules.values()):
        lines.extend(getattr(mod, "ACCEPTANCE_RESULTS", []))
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(set(lines), key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
