import os

import numpy as np
import pytest

from nmmb import kernels


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request):
    return kernels.BACKENDS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20260)


@pytest.fixture(scope="session")
def session_cache(tmp_path_factory):
    """One basis cache shared by every test that runs the default geometry."""
    path = os.environ.get("NMMB_TEST_CACHE_DIR") or str(tmp_path_factory.mktemp("nmmb-cache"))
    old = os.environ.get("NMMB_CACHE_DIR")
    os.environ["NMMB_CACHE_DIR"] = path
    yield path
    if old is None:
        os.environ.pop("NMMB_CACHE_DIR", None)
    else:
        os.environ["NMMB_CACHE_DIR"] = old


def random_density(rng, d, rank=None):
    rank = rank or d
    A = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real
