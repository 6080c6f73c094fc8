import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "lab",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("lab")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def kron_all(*mats):
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out
