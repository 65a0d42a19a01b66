from __future__ import annotations

import pytest

from groupeqn import catalog


@pytest.fixture(scope="session")
def s3():
    return catalog.load("s3")


@pytest.fixture(scope="session")
def s4():
    return catalog.load("s4")


@pytest.fixture(scope="session")
def a4():
    return catalog.load("a4")


@pytest.fixture(scope="session")
def d4():
    return catalog.load("d4")


@pytest.fixture(scope="session")
def g72():
    return catalog.load("g72")


@pytest.fixture(scope="session")
def g168():
    return catalog.load("g168")


@pytest.fixture(scope="session")
def g168_cert(g168):
    from groupeqn.reduction import find_kh

    return find_kh(g168)
