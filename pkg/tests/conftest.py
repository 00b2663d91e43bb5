import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from knet import kbformat

KB_DIR = Path(__file__).parent.parent / "kb"


@pytest.fixture(scope="session")
def kb_dir() -> Path:
    return KB_DIR


@pytest.fixture(scope="session")
def chain_net():
    return kbformat.parse_file(KB_DIR / "chain.knet.json")


@pytest.fixture(scope="session")
def diamond_net():
    return kbformat.parse_file(KB_DIR / "diamond.knet.json")


@pytest.fixture(scope="session")
def figure1_net():
    return kbformat.parse_file(KB_DIR / "figure1.knet.json")
