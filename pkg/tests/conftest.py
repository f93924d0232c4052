import hypothesis
import numpy as np
import pytest

from infotrellis import BitAllocInstance, generate_instance

np.seterr(all="warn", under="ignore")

hypothesis.settings.register_profile("default", deadline=None, max_examples=100)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile("default")


@pytest.fixture(scope="session")
def canonical():
    return generate_instance(0, 8)


@pytest.fixture
def flat8():
    return BitAllocInstance(a=(1.0,) * 8, b=(1.0,) * 8, d=(0.0,) * 8, p_b=32.0)
