import numpy as np
import pytest
from hypothesis import settings

from cpkrisk.workbench import load_fixture

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def fixture_dims():
    return {d.dimension_id: d for d in load_fixture()}


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)
