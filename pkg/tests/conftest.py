import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nsmlimit.spectral import ScalarField, VectorField, build_grid, strip_nyquist, to_spectral

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_scalar(grid, rng, decay=2.0):
    f = strip_nyquist(to_spectral(rng.standard_normal(grid.shape), grid))
    return ScalarField(grid, f.coeffs * (1.0 + grid.k2) ** (-decay / 4))


def random_vector(grid, rng, decay=2.0):
    comps = [random_scalar(grid, rng, decay) for _ in range(3)]
    return VectorField.from_components(comps)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def g2():
    return build_grid(2, 16)


@pytest.fixture(scope="session")
def g3():
    return build_grid(3, 8)
