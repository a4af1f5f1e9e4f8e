import sys
from pathlib import Path

import pytest

from hvsbench import DisplayModel

TESTS_DIR = Path(__file__).resolve().parent
if str(TESTS_DIR) not in sys.path:
    sys.path.insert(0, str(TESTS_DIR))


@pytest.fixture(scope="session")
def display():
    return DisplayModel()


@pytest.fixture(scope="session")
def adapter_cmd():
    """Launch command for a test adapter script, plus its arguments."""

    def build(script: str, *args: str):
        return [sys.executable, str(TESTS_DIR / "adapters" / script),
                *map(str, args)]

    return build
