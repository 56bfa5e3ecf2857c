#!/usr/bin/env python3
"""End-to-end tour of a nimkit node, printed step by step.

Runs entirely in memory with a manually advanced clock so every run
prints the same output: model registration, ingestion, virtual-type
queries, value appends with deduplication, history windows, forecasts,
runtime model extension, the builtin grid-connection rule, diagnostics
for a broken model, and purging of expired values.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

from nimkit.node import NimNode
from nimkit.store import StoreConfig
from nimkit.util import format_instant

START = datetime(2026, 1, 1, tzinfo=timezone.utc)


class Clock:
    """Manually advanced UTC clock, for reproducible output."""

    def __init__(self) -> None:
        self.now = START

    def __call__(self) -> datetime:
        return self.now

    def advance(self, seconds: float) -> None:
        self.now += timedelta(seconds=seconds)


def banner(title: str) -> None:
    print()
    print(f"=== {title} " + "=" * max(0, 60 - len(title)))


def show_value(label: str, tv) -> None:
    if tv is None:
        print(f"  {label}: (no value)")
        return
    expiry = format_instant(tv.expiry) if tv.expiry else "never"
    print(f"  {label}: {tv.value!r} @ {format_instant(tv.timestamp)} (expires {expiry})")


ROOM = """\
Room {
  String roomName;
}
"""

ANOTHER_ROOM = """\
AnotherRoom {
  String roomID;
  Number surface;
}
"""

STANDARD_ROOM = """\
StandardRoom {
  String identifier;
}

StandardRoom.identifier := Room.roomName | AnotherRoom.roomID;
"""

SENSOR = """\
package demo.sensors;

TemperatureSensor {
  String sensorId;
  Number celsius;
}
"""

BROKEN = """\
T { String x; }
S { Number n; }
T.x := S.n;
"""


def descriptor_of(node: NimNode, model_id: str):
    return next(d for d in node.list_models() if d.model_id == model_id)


def main() -> None:
    clock = Clock()
    node = NimNode(StoreConfig(node_location="local", clock=clock))

    banner("Builtin models")
    for result in node.load_builtins():
        print(f"  registered {result.model_id}")

    banner("Registering room models")
    for source in (ROOM, ANOTHER_ROOM, STANDARD_ROOM):
        result = node.register_model(source)
        d = descriptor_of(node, result.model_id)
        names = ", ".join(
            f"{t} (virtual)" if t in d.virtual_types else t for t in d.types
        )
        print(f"  {d.model_id}: types [{names}]")

    banner("Ingesting instances")
    room_id = node.ingest("Room", {"roomName": "A"})
    print(f"  Room {{roomName: 'A'}} -> {room_id}")
    clock.advance(1)
    alt_id = node.ingest("AnotherRoom", {"roomID": "B7", "surface": 12.5})
    print(f"  AnotherRoom {{roomID: 'B7', surface: 12.5}} -> {alt_id}")

    banner("Querying the mapping-defined type")
    for inst in node.query("StandardRoom"):
        print(f"  StandardRoom {dict(inst.fields)}  (backed by {inst.instance_id})")

    banner("Appending values (change-only)")
    clock.advance(60)
    r = node.append_value("Room", room_id, "roomName", "A-renamed")
    print(f"  append 'A-renamed' -> {r.status}")
    r = node.append_value("Room", room_id, "roomName", "A-renamed")
    print(f"  append 'A-renamed' again -> {r.status}")
    clock.advance(60)
    r = node.append_value(
        "Room",
        room_id,
        "roomName",
        "A-temporary",
        expiry=clock.now + timedelta(seconds=30),
    )
    print(f"  append 'A-temporary' (30s expiry) -> {r.status}")

    banner("Reading the entry back")
    show_value("current", node.current_value("Room", room_id, "roomName"))
    clock.advance(120)
    show_value("2 min later (temporary value expired)",
               node.current_value("Room", room_id, "roomName"))
    window = node.history("Room", room_id, "roomName", START, clock.now)
    print(f"  history over the full window ({len(window)} unexpired values):")
    for tv in window:
        show_value("   -", tv)

    banner("Reading through the virtual type")
    show_value("StandardRoom.identifier of the Room instance",
               node.current_value("StandardRoom", room_id, "identifier"))
    show_value("StandardRoom.identifier of the AnotherRoom instance",
               node.current_value("StandardRoom", alt_id, "identifier"))

    banner("Forecasts")
    horizon = [(clock.now + timedelta(hours=h), 20.0 + h) for h in (1, 2, 3)]
    node.add_forecast("AnotherRoom", alt_id, "surface", "model-a", horizon)
    clock.advance(30)
    node.add_forecast(
        "AnotherRoom", alt_id, "surface", "model-a",
        [(clock.now + timedelta(hours=1), 21.5)],
    )
    node.add_forecast(
        "AnotherRoom", alt_id, "surface", "model-b",
        [(clock.now + timedelta(hours=1), 19.0)],
    )
    for fc in node.forecasts("AnotherRoom", alt_id, "surface"):
        state = "active" if fc["active"] else "superseded"
        points = ", ".join(f"{p['t']}={p['v']}" for p in fc["points"])
        print(f"  {fc['source']} ({state}): {points}")

    banner("Runtime extension")
    result = node.register_model(SENSOR)
    print(f"  registered {result.model_id} while the node is live")
    sensor_id = node.ingest(
        "demo.sensors.TemperatureSensor", {"sensorId": "t-1", "celsius": 21.0}
    )
    print(f"  ingested TemperatureSensor -> {sensor_id}")

    banner("Grid connections (builtin rule: exactly two distinct elements)")
    b1 = node.ingest("cooperate.nim.Building", {
        "kind": "residential", "address": "1 Canal St", "floorArea": 120.0,
        "EnergyData": [],
    })
    b2 = node.ingest("cooperate.nim.Building", {
        "kind": "office", "address": "2 Canal St", "floorArea": 800.0,
        "EnergyData": [],
    })
    cid = node.ingest("cooperate.nim.EnergyGridConnection",
                      {"elements": f"{b1} {b2}", "capacity": 100.0})
    print(f"  linked two buildings -> {cid}")
    try:
        node.ingest("cooperate.nim.EnergyGridConnection",
                    {"elements": f"{b1} {b1}", "capacity": 5.0})
    except Exception as exc:
        print(f"  self-link rejected: {exc}")

    banner("Diagnostics for a broken model")
    result = node.register_model(BROKEN)
    print(f"  accepted: {result.ok}")
    for diag in result.diagnostics:
        print(f"  {diag.line}:{diag.column}: {diag.severity} [{diag.code}] {diag.message}")

    banner("Purging expired values")
    deleted = node.purge()
    print(f"  purge removed {deleted} expired value(s)")
    window = node.history("Room", room_id, "roomName", START, clock.now)
    print(f"  history afterwards still shows {len(window)} unexpired values")

    print()
    print("done.")


if __name__ == "__main__":
    main()
