import sys
from pathlib import Path

import pytest

# make sibling test helpers importable when running from the repo root
sys.path.insert(0, str(Path(__file__).parent))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running simulation oracles")
