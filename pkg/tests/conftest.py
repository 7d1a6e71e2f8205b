import numpy as np
import pytest

from massart_halfspace import disk_profile, gaussian_profile


@pytest.fixture(scope="session")
def disk():
    return disk_profile()


@pytest.fixture(scope="session")
def gaussian():
    return gaussian_profile()


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)
