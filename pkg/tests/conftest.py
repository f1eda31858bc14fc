import pytest

from vplt.api import BUILTIN, builtin_machine
from vplt.automata import parse_vpa


@pytest.fixture(scope="session")
def machines():
    return {name: parse_vpa(builtin_machine(name), name) for name in BUILTIN}


@pytest.fixture(scope="session")
def disj(machines):
    return machines["disj"]


@pytest.fixture(scope="session")
def paren(machines):
    return machines["paren"]


@pytest.fixture(scope="session")
def nest4(machines):
    return machines["nest4"]
