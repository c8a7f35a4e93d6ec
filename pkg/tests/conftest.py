import numpy as np
import pytest

from cavqudit.params import DEVICE_PARAMS


@pytest.fixture(scope="session")
def params():
    return DEVICE_PARAMS


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def random_unitary(rng, d):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_density_matrix(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)
