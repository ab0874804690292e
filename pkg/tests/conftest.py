import random

import pytest

from diaforge.describe import load_templates
from diaforge.genspec import default_profiles, sample_spec
from diaforge.keywords import load_bank


@pytest.fixture(scope="session")
def bank():
    return load_bank()


@pytest.fixture(scope="session")
def profiles():
    return default_profiles()


@pytest.fixture(scope="session")
def templates():
    return load_templates()


@pytest.fixture
def make_spec(bank, profiles):
    """Sample one spec deterministically from (family, level, seed)."""

    def _make(family, level, seed=0):
        rng = random.Random(seed)
        return sample_spec(family, level, profiles[(family, level)], bank, rng)

    return _make
