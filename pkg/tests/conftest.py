import functools

import numpy as np
import pytest

from anharmonic_lmg.eigensolve import solve
from anharmonic_lmg.spinmodel import ModelParams


@functools.lru_cache(maxsize=None)
def cached_spectrum(N, gamma, alpha, parity="even", vectors=False):
    return solve(ModelParams(N, gamma, alpha), parity, want_vectors=vectors)


@pytest.fixture(scope="session")
def spectrum():
    return cached_spectrum


@pytest.fixture
def rng():
    return np.random.default_rng(20221018)
