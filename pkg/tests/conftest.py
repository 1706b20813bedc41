import pytest
from fastapi.testclient import TestClient

from app.main import app
from app.net.graph import CommGraph, build_topology


@pytest.fixture
def client():
    """Test client fixture"""
    return TestClient(app)


@pytest.fixture
def path3():
    """Path 0-1-2"""
    return CommGraph(3, frozenset({(0, 1), (1, 2)}))


@pytest.fixture
def k4():
    return build_topology("complete", n_agents=4)


@pytest.fixture
def star5():
    return build_topology("star", n_agents=5, delay=1)


@pytest.fixture
def ring3():
    """2-regular graph on three agents with unit delay"""
    return build_topology("r_regular", n_agents=3, degree=2, delay=1)


@pytest.fixture
def matching_config_text():
    return """
[experiment]
kind = matching
algorithms = greedy, random
seeds = 0..2
stride = 4

[algorithm]
value_fn = or
n_nodes = 16
prior = 0.4
"""


@pytest.fixture
def coop_config_text():
    return """
[experiment]
kind = coop
algorithms = cftrl, exp3_coop
horizon = 40
seeds = 0, 1
stride = 10

[topology]
kind = r_regular
n_agents = 3
degree = 2
delay = 1

[environment]
kind = bernoulli_linear
n_arms = 4
"""
