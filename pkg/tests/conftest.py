"""Shared fixtures: compiled kernels, corpus specs, and orbit databases.

Databases are session-scoped because enumeration is the expensive step
shared by the spectral, mme, and validation tests.  Acceptance tests that
assert wall-clock budgets build their own fresh copies instead."""

import numpy as np
import pytest

from torusdyn import corpus, kernels
from torusdyn.orbits import OrbitDatabase

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    kernels.warmup()


@pytest.fixture(scope="session")
def cat_lin():
    return corpus.cat_linear()


@pytest.fixture(scope="session")
def cat02():
    return corpus.cat_sin(0.02)


@pytest.fixture(scope="session")
def cat05():
    return corpus.cat_sin(0.05)


@pytest.fixture(scope="session")
def fib():
    return corpus.fib_linear()


@pytest.fixture(scope="session")
def db_cat_lin(cat_lin, warm_kernels):
    return OrbitDatabase.build(cat_lin, range(1, 11))


@pytest.fixture(scope="session")
def db_cat02(cat02, warm_kernels):
    return OrbitDatabase.build(cat02, range(1, 9))


@pytest.fixture(scope="session")
def db_cat05(cat05, warm_kernels):
    return OrbitDatabase.build(cat05, range(1, 11))


@pytest.fixture(scope="session")
def db_fib(fib, warm_kernels):
    return OrbitDatabase.build(fib, range(1, 11))


@pytest.fixture()
def rng():
    return np.random.default_rng(20260817)


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
