from __future__ import annotations

import pytest

from flexmind.engine import IdeationEngine
from flexmind.providers import MockProvider, bundled_fixtures_dir
from flexmind.store import EventStore


@pytest.fixture
def store(tmp_path):
    return EventStore(tmp_path / "data")


@pytest.fixture
def engine(store):
    return IdeationEngine(store, MockProvider(bundled_fixtures_dir()))


@pytest.fixture
def placeholder_engine(store):
    provider = MockProvider(bundled_fixtures_dir(), placeholder_mode=True)
    return IdeationEngine(store, provider)
