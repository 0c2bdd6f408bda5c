import pytest

from aeclab.catalog import get_entry
from aeclab.structures import make_graph


@pytest.fixture(scope="session")
def cg():
    return get_entry("CG").klass


@pytest.fixture(scope="session")
def us1():
    return get_entry("US1").klass


@pytest.fixture(scope="session")
def eq3():
    return get_entry("EQ3").klass


@pytest.fixture(scope="session")
def cycle4():
    return make_graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


@pytest.fixture(scope="session")
def path3():
    return make_graph(3, [(0, 1), (1, 2)])
