import math

import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

P_OSC = 1 + math.sqrt(3) / 3


@pytest.fixture(scope="session")
def p_osc():
    return P_OSC
