import pytest

from relheat.geometry import Ball
from relheat.sampler import RngStream
from relheat.specfun import ProcessParams


@pytest.fixture
def cauchy2d():
    return ProcessParams(alpha=1.0, m=0.0, d=2)


@pytest.fixture
def relativistic2d():
    return ProcessParams(alpha=1.0, m=1.0, d=2)


@pytest.fixture
def unit_ball():
    return Ball(center=(0.0, 0.0), radius=1.0, d=2)


@pytest.fixture
def rng():
    return RngStream(seed=20240817, stream_id=0)


def assert_within_se(value, target, se, z=4.0, msg=""):
    assert abs(value - target) <= z * se, (
        f"{msg}: {value} vs {target} differs by {abs(value - target):.3e} "
        f"> {z} x {se:.3e}"
    )


@pytest.fixture
def within_se():
    return assert_within_se
