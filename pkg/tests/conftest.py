import pytest

from racesim.dynamics import VehicleParams
from racesim.raceline import RacelineParams, centerline_raceline, compute_raceline
from racesim.track import make_oval, make_single_corner, make_square


@pytest.fixture(scope="session")
def params():
    return VehicleParams()


@pytest.fixture(scope="session")
def oval():
    return make_oval()


@pytest.fixture(scope="session")
def square():
    return make_square()


@pytest.fixture(scope="session")
def single_corner():
    return make_single_corner()


@pytest.fixture(scope="session")
def oval_raceline(oval):
    return compute_raceline(oval)


@pytest.fixture(scope="session")
def oval_centerline_line(oval):
    return centerline_raceline(oval)


@pytest.fixture(scope="session")
def corner_raceline(single_corner):
    return compute_raceline(single_corner)


@pytest.fixture(scope="session")
def raceline_params():
    return RacelineParams()
