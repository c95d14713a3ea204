import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import cgmkit


@pytest.fixture(scope="session")
def fixture_model():
    return cgmkit.load_fixture()


@pytest.fixture(scope="session")
def fixture_text():
    return cgmkit.fixture_text()
