import os

# keep BLAS single-threaded; the suite parallelizes across processes instead
for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(var, "1")

import numpy as np
import pytest

from spincontact.params import SatelliteParams


@pytest.fixture(scope="session")
def params():
    return SatelliteParams()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
