import numpy as np
import pytest

from volterra_msm import _accel
from volterra_msm.methods import REGISTRY

ADMITTED = ("ab1", "ab2", "ab3", "nystrom2", "bdf1", "bdf2", "bdf3", "bdf4", "bdf5", "bdf6")

BACKENDS = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_report_header(config):
    return f"volterra_msm backend: {_accel.backend_name()}; registry: {', '.join(REGISTRY)}"
