import numpy as np
import pytest

from app.models import Permutation, PreferenceProfile


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full-scale calibration experiments")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def profile_from_labels(a_orders, b_orders) -> PreferenceProfile:
    """Build a profile from 1-based preference orders, as written in the text format."""
    return PreferenceProfile(
        [Permutation.from_order([a - 1 for a in order]) for order in a_orders],
        [Permutation.from_order([b - 1 for b in order]) for order in b_orders],
    )


@pytest.fixture
def two_by_two():
    # Both A agents prefer B1; B1 prefers A2
    return profile_from_labels([[1, 2], [1, 2]], [[2, 1], [1, 2]])


@pytest.fixture
def make_profile():
    return profile_from_labels
