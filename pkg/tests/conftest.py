import numpy as np
import pytest

from halfspace import GridSpec, identity_coefficients, perturbation_of_identity
from halfspace.bvp import FirstOrderSystem


@pytest.fixture(scope="session")
def g32():
    return GridSpec(dim=1, points=32, system_size=1)


@pytest.fixture(scope="session")
def g64():
    return GridSpec(dim=1, points=64, system_size=1)


@pytest.fixture(scope="session")
def g8x2():
    return GridSpec(dim=2, points=8, system_size=1)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def identity_system_32(g32):
    return FirstOrderSystem(identity_coefficients(g32))


@pytest.fixture(scope="session")
def perturbed_system_32(g32):
    rng = np.random.default_rng(7)
    return FirstOrderSystem(perturbation_of_identity(g32, rng, 0.15))


@pytest.fixture(scope="session")
def perturbed_system_2d(g8x2):
    rng = np.random.default_rng(11)
    return FirstOrderSystem(perturbation_of_identity(g8x2, rng, 0.1))


def band_limited_scalar(grid, rng, decay=6.0):
    shape = grid.shape + (grid.system_size,)
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    kn = grid.frequency_norms()
    w = np.exp(-kn / decay)
    w[(0,) * grid.dim] = 0.0
    spec = np.fft.fftn(noise, axes=tuple(range(grid.dim)), norm="forward") * w[..., None]
    out = np.fft.ifftn(spec, axes=tuple(range(grid.dim)), norm="forward")
    return out[..., 0] if grid.system_size == 1 else out
