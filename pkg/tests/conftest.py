import numpy as np
import pytest

from rotaset.conservative import ConservativeParams, build_example_conservative
from rotaset.dissipative import DissipativeParams, build_example, build_unlocked
from rotaset.maps import LiftedMap


def linear_map(a, b, c, d, name="linear"):
    """Plane map z -> A z; not a lift, used only for local index checks."""
    A = np.array([[a, b], [c, d]], dtype=float)
    return LiftedMap(lambda z: z @ A.T, name, {}, lambda w: w @ np.linalg.inv(A).T)


@pytest.fixture(scope="session")
def dissipative():
    return build_example(DissipativeParams())


@pytest.fixture(scope="session")
def dissipative_unlocked():
    return build_unlocked(DissipativeParams(), 0.02)


@pytest.fixture(scope="session")
def conservative():
    return build_example_conservative(ConservativeParams())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
