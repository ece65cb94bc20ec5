import pytest

from cdcpath.geometry import Environment, constrained_delaunay
from cdcpath.partition import partition_from_cdt

ANNULUS_HOLE = [(0.4, 0.4), (0.6, 0.4), (0.6, 0.6), (0.4, 0.6)]


@pytest.fixture
def empty_env():
    return Environment(obstacles=[])


@pytest.fixture
def annulus_env():
    return Environment(obstacles=[ANNULUS_HOLE])


@pytest.fixture
def empty_partition(empty_env):
    return partition_from_cdt(constrained_delaunay(empty_env))


@pytest.fixture
def annulus_partition(annulus_env):
    return partition_from_cdt(constrained_delaunay(annulus_env))
