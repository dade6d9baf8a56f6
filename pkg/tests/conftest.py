import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import FIG1_CLAUSES  # noqa: E402

from boxparse.drs import parse_clause_document  # noqa: E402


@pytest.fixture
def fig1_doc():
    return parse_clause_document(FIG1_CLAUSES)


@pytest.fixture
def fig1_drs(fig1_doc):
    return fig1_doc.drs


@pytest.fixture
def rng():
    return np.random.default_rng(20240 + 9)
