import numpy as np
import pytest

from qpermute.oracle import haar_random_spinor, haar_random_unitary


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_instance(seed):
    """(u0, u1, alpha, beta, psi) for the two-operator problem."""
    rng = np.random.default_rng(seed)
    u0, u1 = haar_random_unitary(rng), haar_random_unitary(rng)
    c = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    c /= np.linalg.norm(c)
    return u0, u1, complex(c[0]), complex(c[1]), haar_random_spinor(rng)
