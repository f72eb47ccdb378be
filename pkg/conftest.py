"""Shared fixtures for the RxO test suite."""

import sys
from pathlib import Path

import pytest

# Add current directory to path
sys.path.append(str(Path(__file__).parent))

from catalog.registry import new_database
from oracle import d0_database, d0_schema


@pytest.fixture
def empty_db():
    return new_database()


@pytest.fixture
def schema_db():
    """Goods, documents and contractors, without objects."""
    return d0_schema()


@pytest.fixture
def d0():
    """One bank, two contractors, two goods and three documents."""
    return d0_database()
