import random

import pytest
from hypothesis import HealthCheck, settings

from xius.kset import SigmaCoder
from xius.params import preset

settings.register_profile("default", deadline=None, derandomize=True, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def toyA():
    return preset("toyA")


@pytest.fixture
def toyU():
    return preset("toyU")


@pytest.fixture
def toyS():
    return preset("toyS")


@pytest.fixture
def special_world(toyU):
    """Three toy special sequences on disjoint windows, with their coder."""
    from xius.suites import toy_sequences
    coder = SigmaCoder(toyU)
    return toyU, coder, toy_sequences(toyU, coder, random.Random(5))
