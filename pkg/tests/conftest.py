import numpy as np
import pytest

from mollilap.cauchy import NormalEquations
from mollilap.compact_fd import assemble_system
from mollilap.examples import example, sample_G, u_exact
from mollilap.grids import make_grid2d

ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def grid53():
    """The reference grid [0, 7] x [0, 4] with h_x = 0.25, h_y = 0.025."""
    return make_grid2d(0.0, 7.0, 4.0, 0.25, 0.025)


@pytest.fixture(scope="session")
def ex1_system(grid53):
    return assemble_system(grid53, sample_G(example(1), grid53.xgrid))


@pytest.fixture(scope="session")
def ex1_normal(ex1_system):
    return NormalEquations(ex1_system)


@pytest.fixture(scope="session")
def ex1_u(grid53):
    return u_exact(example(1), grid53)


@pytest.fixture(scope="session")
def small_grid():
    return make_grid2d(0.0, 2.0, 1.0, 0.25, 0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects ``(criterion, passed, detail)`` lines for the terminal summary."""
    return request.config.stash.setdefault(ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for crit, passed, detail in sorted(lines, key=lambda r: _criterion_order(r[0])):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  criterion {crit}: {detail}")


def _criterion_order(crit):
    head, _, tail = crit.partition("[")
    return int(head), tail
