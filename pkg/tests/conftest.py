"""Shared instance fixtures.  Session scope: builders are pure and the
engines only attach caches, so reuse across tests is safe and fast."""

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from designlat.applications import builtin_instance


@pytest.fixture(scope="session")
def fano():
    return builtin_instance("fano")["instance"]


@pytest.fixture(scope="session")
def latin3():
    return builtin_instance("latin-3")["instance"]


@pytest.fixture(scope="session")
def sudoku2():
    return builtin_instance("sudoku-2")["instance"]


@pytest.fixture(scope="session")
def tryst9():
    return builtin_instance("tryst-9")["instance"]


@pytest.fixture(scope="session")
def octa():
    return builtin_instance("twisted-octahedron")["instance"]


@pytest.fixture(scope="session")
def kts9():
    got = builtin_instance("kts-9", seed=0)
    return got["instance"], got["decoder"]
