from pathlib import Path

import pytest

from ccskit import dsl

CORPUS = Path(__file__).resolve().parent.parent / "corpus"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN


@pytest.fixture(scope="session")
def watertank():
    return dsl.load_file(CORPUS / "watertank.ccs")


@pytest.fixture(scope="session")
def two_tanks():
    return dsl.load_file(CORPUS / "two_tanks.ccs")


@pytest.fixture(scope="session")
def two_tanks_parts():
    """(sysdecl, controllers, plants, env, invariant) before composition."""
    text = (CORPUS / "two_tanks.ccs").read_text()
    return dsl.build_components(text)
