import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def phi_plus(d):
    v = np.zeros(d * d, dtype=complex)
    v[:: d + 1] = 1 / np.sqrt(d)
    return np.outer(v, v.conj())
