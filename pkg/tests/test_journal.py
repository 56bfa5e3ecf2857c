"""Durability: journal format, corruption handling, replay equivalence."""

import json
from datetime import timedelta
from pathlib import Path

from nimkit.ndf.parser import parse
from nimkit.store import (
    JOURNAL_FILENAME,
    Journal,
    Store,
    StoreConfig,
)
from nimkit.serde import canonical_json
from nimkit.transform import to_generic, validate_document

from tests.conftest import ROOM_MODEL, Clock, register_sample_rooms
from tests.generators import BASE_TIME

ROOM_TD = parse(ROOM_MODEL).model.types[0]


def journal_lines(path: Path):
    return [
        json.loads(line)
        for line in path.read_text().splitlines()
        if line.strip()
    ]


# -- Journal file format -------------------------------------------------------


def test_records_are_numbered_json_lines(tmp_path):
    journal = Journal(tmp_path / "j")
    journal.append("alpha", {"a": 1})
    journal.append("beta", {"b": 2})
    journal.close()
    lines = journal_lines(tmp_path / "j")
    assert lines == [
        {"seq": 1, "kind": "alpha", "payload": {"a": 1}},
        {"seq": 2, "kind": "beta", "payload": {"b": 2}},
    ]


def test_read_missing_file_is_empty():
    scan = Journal.read(Path("/nonexistent/journal"))
    assert scan.records == [] and scan.warning is None and scan.valid_bytes == 0


def test_read_round_trip(tmp_path):
    journal = Journal(tmp_path / "j")
    journal.append("alpha", {"x": [1, 2]})
    journal.close()
    scan = Journal.read(tmp_path / "j")
    assert scan.warning is None
    assert scan.valid_bytes == (tmp_path / "j").stat().st_size
    assert scan.starts == [0]
    assert scan.records[0].kind == "alpha" and scan.records[0].payload == {"x": [1, 2]}


def test_read_stops_at_torn_tail(tmp_path):
    journal = Journal(tmp_path / "j")
    journal.append("alpha", {"n": 1})
    journal.append("beta", {"n": 2})
    journal.close()
    good_size = (tmp_path / "j").stat().st_size
    with open(tmp_path / "j", "a") as fh:
        fh.write('{"seq":3,"kind":"gamma","payl')  # torn write
    scan = Journal.read(tmp_path / "j")
    assert [r.seq for r in scan.records] == [1, 2]
    assert "line 3" in scan.warning
    assert scan.valid_bytes == good_size


def test_read_stops_at_out_of_order_seq(tmp_path):
    journal = Journal(tmp_path / "j")
    journal.append("alpha", {})
    journal.close()
    with open(tmp_path / "j", "a") as fh:
        fh.write('{"seq":7,"kind":"beta","payload":{}}\n')
    scan = Journal.read(tmp_path / "j")
    assert [r.seq for r in scan.records] == [1]
    assert "expected seq 2, found 7" in scan.warning


def test_truncation_drops_the_corrupt_tail(tmp_path):
    journal = Journal(tmp_path / "j")
    journal.append("alpha", {})
    journal.close()
    with open(tmp_path / "j", "a") as fh:
        fh.write("garbage")
    scan = Journal.read(tmp_path / "j")
    resumed = Journal(tmp_path / "j", start_seq=2, truncate_at=scan.valid_bytes)
    resumed.append("beta", {})
    resumed.close()
    scan = Journal.read(tmp_path / "j")
    assert scan.warning is None
    assert [(r.seq, r.kind) for r in scan.records] == [(1, "alpha"), (2, "beta")]


def test_blank_lines_are_skipped(tmp_path):
    (tmp_path / "j").write_text(
        '{"seq":1,"kind":"alpha","payload":{}}\n\n{"seq":2,"kind":"beta","payload":{}}\n'
    )
    scan = Journal.read(tmp_path / "j")
    assert scan.warning is None
    assert [r.seq for r in scan.records] == [1, 2]


# -- store replay ------------------------------------------------------------------


def replaying_store(path, clock):
    fresh = Store(StoreConfig(node_location="local", clock=clock))
    scan = Journal.read(path)
    assert scan.warning is None
    for record in scan.records:
        fresh.apply_record(record)
    return fresh


def test_store_replay_reproduces_state_bytes(tmp_path, clock):
    path = tmp_path / JOURNAL_FILENAME
    store = Store(
        StoreConfig(node_location="local", clock=clock), Journal(path)
    )
    tree = to_generic(
        ROOM_TD, validate_document(ROOM_TD, {"roomName": "A"}), clock.now
    )
    tree.instance_id = "r1"
    store.create_instance("Room", tree)
    clock.advance(10)
    store.append_value(
        "r1", ["roomName"], "B", expiry=clock.now + timedelta(seconds=30)
    )
    clock.advance(10)
    store.append_value("r1", ["roomName"], "C")
    store.add_forecast(
        "r1", ["roomName"], "srv", [(clock.at(100), "D")]
    )
    clock.advance(60)
    store.purge_expired()

    replayed = replaying_store(path, clock)
    assert canonical_json(replayed.canonical_state()) == canonical_json(
        store.canonical_state()
    )


def test_deduplicated_appends_are_not_journaled(tmp_path, clock):
    path = tmp_path / JOURNAL_FILENAME
    store = Store(StoreConfig(node_location="local", clock=clock), Journal(path))
    tree = to_generic(
        ROOM_TD, validate_document(ROOM_TD, {"roomName": "A"}), clock.now
    )
    tree.instance_id = "r1"
    store.create_instance("Room", tree)
    clock.advance(5)
    store.append_value("r1", ["roomName"], "A")  # dedup
    store.append_value("r1", ["roomName"], 42)  # rejected
    assert len(journal_lines(path)) == 1


def test_purge_is_journaled_and_replayed(tmp_path, clock):
    path = tmp_path / JOURNAL_FILENAME
    store = Store(StoreConfig(node_location="local", clock=clock), Journal(path))
    tree = to_generic(
        ROOM_TD, validate_document(ROOM_TD, {"roomName": "A"}), clock.now
    )
    tree.instance_id = "r1"
    store.create_instance("Room", tree)
    clock.advance(1)
    store.append_value("r1", ["roomName"], "B", expiry=clock.at(10))
    clock.advance(100)
    store.purge_expired()
    kinds = [line["kind"] for line in journal_lines(path)]
    assert kinds == ["instance-created", "value-appended", "purged"]
    replayed = replaying_store(path, clock)
    assert canonical_json(replayed.canonical_state()) == canonical_json(
        store.canonical_state()
    )


# -- node replay ---------------------------------------------------------------------


def test_node_restart_restores_models_and_data(durable_node_factory, clock):
    node = durable_node_factory()
    register_sample_rooms(node)
    rid = node.ingest("Room", {"roomName": "A"})
    node.ingest("AnotherRoom", {"roomID": "B7", "surface": 20})
    clock.advance(10)
    node.append_value("Room", rid, "roomName", "A2")
    before = node.canonical_snapshot()
    node.close()

    reopened = durable_node_factory()
    assert reopened.journal_warning is None
    assert reopened.canonical_snapshot() == before
    assert [i.fields["identifier"] for i in reopened.query("StandardRoom")] == [
        "A2",
        "B7",
    ]
    reopened.close()


def test_node_keeps_appending_after_restart(durable_node_factory, tmp_path, clock):
    node = durable_node_factory()
    register_sample_rooms(node)
    rid = node.ingest("Room", {"roomName": "A"})
    node.close()

    second = durable_node_factory()
    clock.advance(5)
    assert second.append_value("Room", rid, "roomName", "B").stored
    second.close()

    third = durable_node_factory()
    assert [i.fields["roomName"] for i in third.query("Room")] == ["B"]
    lines = journal_lines(tmp_path / JOURNAL_FILENAME)
    assert [line["seq"] for line in lines] == list(range(1, len(lines) + 1))
    third.close()


def test_node_truncates_corrupt_tail_and_recovers(
    durable_node_factory, tmp_path, clock
):
    node = durable_node_factory()
    register_sample_rooms(node)
    node.ingest("Room", {"roomName": "A"})
    good = node.canonical_snapshot()
    node.close()
    with open(tmp_path / JOURNAL_FILENAME, "a") as fh:
        fh.write('{"seq":')

    recovered = durable_node_factory()
    assert "corrupted" in recovered.journal_warning
    assert recovered.canonical_snapshot() == good
    # appending after recovery leaves a clean journal behind
    recovered.ingest("Room", {"roomName": "B"})
    recovered.close()
    final = durable_node_factory()
    assert final.journal_warning is None
    assert len(final.query("Room")) == 2
    final.close()


def test_replay_stops_before_a_record_that_no_longer_applies(
    durable_node_factory, tmp_path
):
    node = durable_node_factory()
    register_sample_rooms(node)
    node.ingest("Room", {"roomName": "A"})
    node.close()
    # damage a *decodable* record: point a value append at a ghost instance
    lines = journal_lines(tmp_path / JOURNAL_FILENAME)
    lines.append(
        {
            "seq": lines[-1]["seq"] + 1,
            "kind": "value-appended",
            "payload": {
                "instanceId": "ghost",
                "path": ["roomName"],
                "value": "X",
                "timestamp": "2026-01-01T00:00:00Z",
                "expiry": None,
                "seq": 99,
            },
        }
    )
    with open(tmp_path / JOURNAL_FILENAME, "w") as fh:
        for line in lines:
            fh.write(json.dumps(line, separators=(",", ":")) + "\n")

    recovered = durable_node_factory()
    assert "replay stopped at record" in recovered.journal_warning
    assert len(recovered.query("Room")) == 1
    # the offending record is dropped, so work after recovery survives
    recovered.ingest("Room", {"roomName": "B"})
    recovered.close()

    final = durable_node_factory()
    assert final.journal_warning is None
    assert len(final.query("Room")) == 2
    final.close()
