import numpy as np
import pytest

from privdetect.entities import default_registry
from privdetect.scoring import TrigramScorer


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture
def gen():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_scorer():
    texts = [
        "Alice paid $250 on March 14 at 09:45 for the blue lamp.",
        "Oliver met Alice at 10:30 and they walked to the market.",
        "the market was busy and the lamp was blue.",
    ] * 5
    return TrigramScorer(0.1).fit(texts)
