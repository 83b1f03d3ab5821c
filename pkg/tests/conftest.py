import numpy as np
import pytest

from conicem import Background, QuadratureSpec, make_cone


@pytest.fixture
def bg():
    return Background(omega=1.0)


@pytest.fixture
def cone30():
    return make_cone([0.0, 0.0, 0.0], [0.0, 0.0, 1.0], np.pi / 6, 1.0)


@pytest.fixture
def cone45():
    return make_cone([0.0, 0.0, 0.0], [0.0, 0.0, 1.0], np.pi / 4, 1.0)


@pytest.fixture
def spec():
    return QuadratureSpec()


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_rotation(rng):
    """Haar-ish rotation from QR of a Gaussian matrix, det +1."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
