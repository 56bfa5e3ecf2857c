"""Shared fixtures: a controllable clock, node/store factories, sample models."""

from __future__ import annotations

from datetime import datetime, timedelta
from pathlib import Path

import pytest

from nimkit.node import NimNode
from nimkit.registry import ModelRegistry
from nimkit.store import Store, StoreConfig

from tests.generators import BASE_TIME

ROOM_MODEL = "Room {\n  String roomName;\n}\n"
ALT_ROOM_MODEL = "AnotherRoom {\n  String roomID;\n  Number surface;\n}\n"
STANDARD_ROOM_MODEL = (
    "StandardRoom {\n  String identifier;\n}\n\n"
    "StandardRoom.identifier := Room.roomName | AnotherRoom.roomID;\n"
)


class Clock:
    """A manually advanced UTC clock for deterministic tests."""

    def __init__(self, start: datetime = BASE_TIME):
        self._now = start

    def __call__(self) -> datetime:
        return self._now

    @property
    def now(self) -> datetime:
        return self._now

    def advance(self, seconds: float) -> datetime:
        self._now += timedelta(seconds=seconds)
        return self._now

    def at(self, seconds: float) -> datetime:
        """BASE_TIME + offset, independent of the current position."""
        return BASE_TIME + timedelta(seconds=seconds)


@pytest.fixture
def clock() -> Clock:
    return Clock()


@pytest.fixture
def store(clock: Clock) -> Store:
    return Store(StoreConfig(node_location="local", clock=clock))


@pytest.fixture
def registry(clock: Clock) -> ModelRegistry:
    return ModelRegistry(clock=clock)


@pytest.fixture
def node(clock: Clock) -> NimNode:
    return NimNode(StoreConfig(node_location="local", clock=clock))


@pytest.fixture
def durable_node_factory(tmp_path: Path, clock: Clock):
    """Build (and rebuild) nodes over the same data directory."""

    def make(location: str = "local") -> NimNode:
        return NimNode(
            StoreConfig(node_location=location, data_dir=tmp_path, clock=clock)
        )

    return make


def register_sample_rooms(target) -> None:
    """Register the three-room sample set on a node or registry."""
    for src in (ROOM_MODEL, ALT_ROOM_MODEL, STANDARD_ROOM_MODEL):
        result = target.register_model(src)
        assert result.ok, [d.render() for d in result.diagnostics]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per executed acceptance criterion."""
    import sys

    module = sys.modules.get("tests.test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, passed in module.RESULTS:
        marker = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:02d} [{marker}] {description}")
