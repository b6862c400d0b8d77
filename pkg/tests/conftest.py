import logging

import pytest

from multigauge.atom import DoubleWell, PotentialSpec, solve_atom
from multigauge.hamiltonian import cavity_system

# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_configure(config):
    logging.getLogger("multigauge").setLevel(logging.WARNING)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path_factory, monkeypatch):
    monkeypatch.setenv("MULTIGAUGE_CACHE_DIR", str(tmp_path_factory.getbasetemp() / "cache"))


@pytest.fixture(scope="session")
def well():
    return PotentialSpec(DoubleWell.from_gamma(64))


@pytest.fixture(scope="session")
def well_basis(well):
    grid = well.default_grid()
    return solve_atom(well(grid.x), grid, 8), grid


@pytest.fixture(scope="session")
def single_mode(well):
    return cavity_system(well, [1.0], 0.4)


@pytest.fixture(scope="session")
def two_mode(well):
    return cavity_system(well, [1.0, 20.0], 0.6)
