"""Shared fixtures: bundled instances and a context factory."""

import numpy as np
import pytest

from abconv import LagrangianContext, catalog_instance


@pytest.fixture(scope="session")
def inst47():
    return catalog_instance("ex4.7")


@pytest.fixture(scope="session")
def inst47r():
    return catalog_instance("ex4.7-reversed")


@pytest.fixture(scope="session")
def inst48():
    return catalog_instance("ex4.8")


@pytest.fixture(scope="session")
def inst56():
    return catalog_instance("ex5.6")


@pytest.fixture(scope="session")
def inst610():
    return catalog_instance("ex6.10")


@pytest.fixture(scope="session")
def inst611():
    return catalog_instance("ex6.11")


@pytest.fixture
def make_ctx():
    """Fresh LagrangianContext per call (the context memoizes sweep tables)."""

    def _make(instance):
        return LagrangianContext(instance)

    return _make


@pytest.fixture
def rng():
    return np.random.default_rng(0)
