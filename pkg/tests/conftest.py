import numpy as np
import pytest

from rqlevels.rate_model import Policy, RateProfile, SystemSpec, constant_profile


def q1_system(rates, r, tau, floor=0):
    """q = 1 system with the given rates on levels floor..r+1 (floor rate 0 prepended)."""
    profile = RateProfile(floor, (0.0,) + tuple(rates))
    return SystemSpec(Policy(r, 1, tau), profile)


def constant_q1(lam, r, tau, floor=0):
    return SystemSpec(Policy(r, 1, tau), constant_profile(lam, floor, r + 1))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
