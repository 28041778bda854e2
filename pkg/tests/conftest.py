import os

import pytest
from hypothesis import settings

from qslp.solver import SolverConfig, run

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def paper_cfg():
    return SolverConfig()


@pytest.fixture(scope="session")
def records(paper_cfg):
    """Solver runs at the default parameter set, shared across test modules."""
    return {name: run(paper_cfg, name) for name in ("slow_light", "eit_memory", "eit_plus_qslp")}


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
