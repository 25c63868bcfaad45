import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from setsolve.engine import Limits
from setsolve.tokeneer import load_corpus, load_lemmas


@pytest.fixture(scope="session")
def corpus_db():
    return load_corpus()


@pytest.fixture(scope="session")
def lemma_manifest():
    return load_lemmas()


@pytest.fixture()
def limits():
    return Limits(timeout_secs=30.0)
