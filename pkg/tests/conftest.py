import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from featagg.dataio import parse_xc

TOY_TEXT = "2 4 3\n0,2 1:0.5 3:1\n1 0:2\n"


@pytest.fixture
def toy_dataset():
    return parse_xc(TOY_TEXT)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
