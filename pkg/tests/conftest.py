import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_pairs(rng, dim, n=100, scale=3.0):
    return [(scale * rng.standard_normal(dim), scale * rng.standard_normal(dim)) for _ in range(n)]
