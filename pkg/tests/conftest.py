import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("entroflow", max_examples=60, deadline=None)
settings.load_profile("entroflow")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
