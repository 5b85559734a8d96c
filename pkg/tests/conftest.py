import functools
from pathlib import Path

import numpy as np
import pytest

from kqmolsa.molecule import build_sphere_set, read_sdf

DATA = Path(__file__).parent / "data"

# every molecule in the fixture SDFs that builds a surface
FIXTURE_FILES = ("methane", "benzene", "naphthalene", "toluene", "sildenafil", "vardenafil", "tadalafil", "multi", "library")


@functools.lru_cache(maxsize=None)
def fixture_spheres():
    """Sphere sets of all fixture molecules, keyed by molecule name."""
    out = {}
    for stem in FIXTURE_FILES:
        for mol in read_sdf(DATA / f"{stem}.sdf"):
            out.setdefault(mol.name, build_sphere_set(mol))
    return out


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    acc = __import__("sys").modules.get("test_acceptance")
    if acc is None or not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acc.RESULTS):
        terminalreporter.write_line(acc.RESULTS[n])
