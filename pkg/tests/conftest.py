import numpy as np
import pytest

from qnetreduce.fixtures import random_valid_family


def rand_complex(rng, rows, cols, rank=None):
    """Dense complex Gaussian matrix, optionally of prescribed rank."""
    if rank is None:
        return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    left = rng.standard_normal((rows, rank)) + 1j * rng.standard_normal((rows, rank))
    right = rng.standard_normal((rank, cols)) + 1j * rng.standard_normal((rank, cols))
    return left @ right


@pytest.fixture(scope="session")
def random_family_suite():
    """100 screened random families shared by the randomized suites."""
    rng = np.random.default_rng(20240817)
    return [random_valid_family(rng) for _ in range(100)]
