"""Journaled in-memory store for generic component trees.

The store owns every ingested instance as a category/entry tree and
enforces the write-side rules: storage-location policy, numeric ranges,
expiry sanity and change-only ingestion (appending a value equal to the
entry's current value is a silent no-op). All reads are served from
memory; durability comes from an append-only JSON-lines journal that is
replayed on start. Records are written before state is mutated, and
every line is flushed, so a killed process loses at most the write in
flight. A mutex serialises writers; readers get detached snapshots.
"""

from __future__ import annotations

import bisect
import json
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Iterable

from .errors import (
    AccessDeniedError,
    IngestRejected,
    JournalError,
    UnknownInstanceError,
)
from .metamodel import (
    Category,
    Entry,
    Forecast,
    TimedValue,
    check_access,
    check_storage_location,
    copy_entry,
    current_value,
    find_categories,
    history as entry_history,
    iter_entries,
    normalize_scalar,
    resolve_path,
    scalar_kind,
    walk,
)
from .ndf.ast import FieldKind
from .serde import (
    decode_component,
    decode_scalar,
    encode_component,
    encode_scalar,
)
from .util import format_instant, new_id, parse_instant, utc_now

JOURNAL_FILENAME = "nim.journal"

KIND_MODEL = "model-registered"
KIND_INSTANCE = "instance-created"
KIND_VALUE = "value-appended"
KIND_FORECAST = "forecast-added"
KIND_PURGE = "purged"

STORED = "stored"
DEDUPLICATED = "deduplicated"
REJECTED = "rejected"


@dataclass(frozen=True)
class StoreConfig:
    """Node-level store settings.

    ``node_location`` is matched against entry storage policies;
    ``data_dir`` of ``None`` runs the store without persistence.
    """

    node_location: str = "local"
    data_dir: Path | None = None
    clock: Callable[[], datetime] = utc_now

    def __post_init__(self) -> None:
        if not self.node_location:
            raise ValueError("node_location must be non-empty")


@dataclass(frozen=True)
class JournalRecord:
    seq: int
    kind: str
    payload: dict


@dataclass(frozen=True)
class JournalReadResult:
    """Outcome of scanning a journal file.

    ``valid_bytes`` is the length of the decodable prefix; ``starts``
    holds the byte offset of each record's line so callers can truncate
    just before a record that decodes but no longer applies.
    """

    records: list[JournalRecord]
    warning: str | None
    valid_bytes: int
    starts: list[int]


@dataclass(frozen=True)
class AppendResult:
    """Outcome of a value or forecast append."""

    status: str  # stored | deduplicated | rejected
    reason: str | None = None

    @property
    def stored(self) -> bool:
        return self.status == STORED


@dataclass(frozen=True)
class InstanceSnapshot:
    """A detached, access-filtered view of one instance tree."""

    instance_id: str
    type_name: str
    root: Category


class Journal:
    """Append-only JSON-lines file of numbered records."""

    def __init__(self, path: Path, start_seq: int = 1, truncate_at: int | None = None):
        self._path = Path(path)
        self._path.parent.mkdir(parents=True, exist_ok=True)
        if truncate_at is not None and self._path.exists():
            # drop a corrupt tail before appending past it
            with open(self._path, "r+b") as fh:
                fh.truncate(truncate_at)
        self._file = open(self._path, "a", encoding="utf-8")
        self._next_seq = start_seq

    @property
    def path(self) -> Path:
        return self._path

    def append(self, kind: str, payload: dict) -> JournalRecord:
        record = JournalRecord(self._next_seq, kind, payload)
        line = json.dumps(
            {"seq": record.seq, "kind": kind, "payload": payload},
            separators=(",", ":"),
        )
        self._file.write(line + "\n")
        self._file.flush()
        self._next_seq += 1
        return record

    def close(self) -> None:
        if not self._file.closed:
            self._file.close()

    @staticmethod
    def read(path: Path) -> JournalReadResult:
        """Scan the file, stopping at the first undecodable or
        out-of-order line; everything before it is returned along with a
        message naming the offending line number.
        """
        records: list[JournalRecord] = []
        starts: list[int] = []
        warning: str | None = None
        try:
            data = Path(path).read_bytes()
        except FileNotFoundError:
            return JournalReadResult([], None, 0, [])
        expected = 1
        pos = 0
        valid = 0
        lineno = 0
        while pos < len(data):
            newline = data.find(b"\n", pos)
            end = len(data) if newline == -1 else newline + 1
            line = data[pos:end].strip()
            lineno += 1
            if line:
                try:
                    obj = json.loads(line.decode("utf-8"))
                    seq = obj["seq"]
                    kind = obj["kind"]
                    payload = obj["payload"]
                    if not isinstance(seq, int) or not isinstance(kind, str):
                        raise ValueError("malformed envelope")
                    if not isinstance(payload, dict):
                        raise ValueError("malformed payload")
                except (ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
                    warning = f"journal corrupted at line {lineno}: {exc}"
                    break
                if seq != expected:
                    warning = (
                        f"journal corrupted at line {lineno}: "
                        f"expected seq {expected}, found {seq}"
                    )
                    break
                starts.append(pos)
                records.append(JournalRecord(seq, kind, payload))
                expected += 1
            pos = end
            valid = end
        return JournalReadResult(records, warning, valid, starts)


@dataclass
class _StoredInstance:
    instance_id: str
    type_name: str
    root: Category
    ingest_index: int = 0


class Store:
    """All instance state of one node, guarded by a single writer lock."""

    def __init__(self, config: StoreConfig, journal: Journal | None = None):
        self._config = config
        self._journal = journal
        self._instances: dict[str, _StoredInstance] = {}
        self._order: list[str] = []
        # every category in every tree, addressable by its instance id
        self._index: dict[str, tuple[Category, str]] = {}
        self._ingest_seq = 0
        self._lock = threading.RLock()

    # -- configuration ------------------------------------------------------

    @property
    def config(self) -> StoreConfig:
        return self._config

    def now(self) -> datetime:
        return self._config.clock()

    def attach_journal(self, journal: Journal | None) -> None:
        self._journal = journal

    def _log(self, kind: str, payload: dict) -> None:
        if self._journal is not None:
            self._journal.append(kind, payload)

    # -- ingestion -----------------------------------------------------------

    def create_instance(
        self, type_name: str, root: Category, *, instance_id: str | None = None
    ) -> str:
        """Admit a fully built tree, assigning ids and sequence numbers.

        Storage-location policies and declared ranges are enforced over
        the whole tree before anything is persisted; a violation rejects
        the complete instance.
        """
        with self._lock:
            top_id = instance_id or root.instance_id or new_id()
            root.instance_id = top_id
            for node in walk(root):
                if isinstance(node, Category) and not node.instance_id:
                    node.instance_id = new_id()
            fresh_ids: set[str] = set()
            for node in walk(root):
                if not isinstance(node, Category):
                    continue
                if node.instance_id in self._index or node.instance_id in fresh_ids:
                    raise IngestRejected(
                        "duplicate-id", f"instance '{node.instance_id}' exists"
                    )
                fresh_ids.add(node.instance_id)
            self._validate_tree(root)
            counter = self._ingest_seq
            for entry in iter_entries(root):
                stamped = []
                for tv in entry.values:
                    counter += 1
                    stamped.append(
                        TimedValue(tv.value, tv.timestamp, tv.expiry, counter)
                    )
                entry.values[:] = stamped
            self._log(
                KIND_INSTANCE,
                {
                    "instanceId": top_id,
                    "type": type_name,
                    "ingestSeq": counter,
                    "tree": encode_component(root),
                },
            )
            self._ingest_seq = counter
            self._admit(top_id, type_name, root)
            return top_id

    def _admit(self, top_id: str, type_name: str, root: Category) -> None:
        stored = _StoredInstance(top_id, type_name, root, len(self._order))
        self._instances[top_id] = stored
        self._order.append(top_id)
        for node in walk(root):
            if isinstance(node, Category):
                self._index[node.instance_id] = (node, node.source_type or type_name)

    def _validate_tree(self, root: Category) -> None:
        for entry in iter_entries(root):
            if not check_storage_location(entry.policy, self._config.node_location):
                raise IngestRejected(
                    "location",
                    f"entry '{entry.name}' may not be stored at "
                    f"'{self._config.node_location}'",
                )
            for tv in entry.values:
                kind = scalar_kind(tv.value)
                if kind is not entry.value_kind:
                    raise IngestRejected(
                        "kind-mismatch",
                        f"entry '{entry.name}' expects {entry.value_kind.value}",
                    )
                if (
                    entry.value_range is not None
                    and entry.value_kind is FieldKind.NUMBER
                    and not entry.value_range.contains(tv.value)
                ):
                    raise IngestRejected(
                        "range",
                        f"value {tv.value} outside "
                        f"[{entry.value_range.lower}, {entry.value_range.upper}] "
                        f"for entry '{entry.name}'",
                    )

    def append_value(
        self,
        instance_id: str,
        path: Iterable[str],
        value: Any,
        *,
        timestamp: datetime | None = None,
        expiry: datetime | None = None,
    ) -> AppendResult:
        """Append one observation to an entry, change-only.

        A value equal to the entry's current value at the store clock is
        deduplicated (nothing stored, nothing journaled). Kind, expiry,
        range and location violations reject the append; rejections are
        results, not exceptions, so callers can surface the reason.
        """
        path = list(path)
        with self._lock:
            entry = self._entry(instance_id, path)
            value = _adapt_scalar(value, entry.value_kind)
            kind = scalar_kind(value)
            if kind is not entry.value_kind:
                return AppendResult(REJECTED, "kind-mismatch")
            value = normalize_scalar(value)
            now = self.now()
            ts = timestamp if timestamp is not None else now
            current = current_value(entry, now)
            if current is not None and current.value == value:
                return AppendResult(DEDUPLICATED)
            if expiry is None and entry.policy.default_expiry is not None:
                expiry = ts + entry.policy.default_expiry
            if expiry is not None and expiry < ts:
                return AppendResult(REJECTED, "expiry")
            if (
                entry.value_kind is FieldKind.NUMBER
                and entry.value_range is not None
                and not entry.value_range.contains(value)
            ):
                return AppendResult(REJECTED, "range")
            if not check_storage_location(entry.policy, self._config.node_location):
                return AppendResult(REJECTED, "location")
            seq = self._ingest_seq + 1
            self._log(
                KIND_VALUE,
                {
                    "instanceId": instance_id,
                    "path": path,
                    "value": encode_scalar(value),
                    "timestamp": format_instant(ts),
                    "expiry": format_instant(expiry) if expiry else None,
                    "seq": seq,
                },
            )
            self._ingest_seq = seq
            self._insert_value(entry, TimedValue(value, ts, expiry, seq))
            return AppendResult(STORED)

    @staticmethod
    def _insert_value(entry: Entry, tv: TimedValue) -> None:
        bisect.insort(
            entry.values, tv, key=lambda v: (v.timestamp, v.ingest_seq)
        )

    def add_forecast(
        self,
        instance_id: str,
        path: Iterable[str],
        source_id: str,
        points: Iterable[tuple[datetime, Any]],
        *,
        created_at: datetime | None = None,
    ) -> AppendResult:
        """Attach a forecast series from one source to an entry."""
        path = list(path)
        with self._lock:
            entry = self._entry(instance_id, path)
            points = [
                (t, normalize_scalar(_adapt_scalar(v, entry.value_kind)))
                for t, v in points
            ]
            for _, v in points:
                if scalar_kind(v) is not entry.value_kind:
                    return AppendResult(REJECTED, "kind-mismatch")
            created = created_at if created_at is not None else self.now()
            try:
                forecast = Forecast(source_id, tuple(points), created)
            except ValueError:
                return AppendResult(REJECTED, "malformed-forecast")
            self._log(
                KIND_FORECAST,
                {
                    "instanceId": instance_id,
                    "path": path,
                    "source": source_id,
                    "createdAt": format_instant(created),
                    "points": [
                        [format_instant(t), encode_scalar(v)] for t, v in points
                    ],
                },
            )
            entry.forecasts.append(forecast)
            return AppendResult(STORED)

    def purge_expired(self, now: datetime | None = None) -> int:
        """Physically delete values whose expiry has passed."""
        with self._lock:
            when = now if now is not None else self.now()
            deleted = self._purge(when)
            self._log(
                KIND_PURGE, {"now": format_instant(when), "deleted": deleted}
            )
            return deleted

    def _purge(self, when: datetime) -> int:
        deleted = 0
        for stored in self._instances.values():
            for entry in iter_entries(stored.root):
                kept = [tv for tv in entry.values if not tv.expired(when)]
                deleted += len(entry.values) - len(kept)
                entry.values[:] = kept
        return deleted

    # -- lookup --------------------------------------------------------------

    def _find_category(self, instance_id: str) -> tuple[Category, str] | None:
        return self._index.get(instance_id)

    def _entry(self, instance_id: str, path: list[str]) -> Entry:
        found = self._find_category(instance_id)
        if found is None:
            raise UnknownInstanceError(f"no instance '{instance_id}'")
        category, _ = found
        return resolve_path(category, path)

    def has_instance(self, instance_id: str) -> bool:
        with self._lock:
            return self._find_category(instance_id) is not None

    def instance_type(self, instance_id: str) -> str:
        with self._lock:
            found = self._find_category(instance_id)
            if found is None:
                raise UnknownInstanceError(f"no instance '{instance_id}'")
            return found[1]

    # -- reads ----------------------------------------------------------------

    def query(
        self,
        type_name: str,
        principals: Iterable[str] = (),
        at: datetime | None = None,
    ) -> list[InstanceSnapshot]:
        """Access-filtered snapshots of all instances of a type.

        Top-level instances come back in ingestion order; categories
        nested inside other instances match as well, in the order of
        their enclosing instance then tree position.
        """
        principals = tuple(principals)
        with self._lock:
            when = at if at is not None else self.now()
            snapshots: list[InstanceSnapshot] = []
            for iid in self._order:
                stored = self._instances[iid]
                if stored.type_name == type_name:
                    roots = [stored.root]
                else:
                    roots = find_categories(stored.root, type_name)
                for root in roots:
                    snapshots.append(
                        InstanceSnapshot(
                            instance_id=root.instance_id,
                            type_name=type_name,
                            root=_filter_category(root, principals, when),
                        )
                    )
            return snapshots

    def get_instance(
        self,
        instance_id: str,
        principals: Iterable[str] = (),
        at: datetime | None = None,
    ) -> InstanceSnapshot:
        with self._lock:
            found = self._find_category(instance_id)
            if found is None:
                raise UnknownInstanceError(f"no instance '{instance_id}'")
            category, type_name = found
            when = at if at is not None else self.now()
            return InstanceSnapshot(
                instance_id=instance_id,
                type_name=type_name,
                root=_filter_category(category, tuple(principals), when),
            )

    def entry_view(
        self, instance_id: str, path: Iterable[str], principals: Iterable[str]
    ) -> Entry:
        """The live entry if the caller may read it (for history/forecasts)."""
        with self._lock:
            entry = self._entry(instance_id, list(path))
            if not check_access(entry.policy, tuple(principals)):
                raise AccessDeniedError(
                    f"roles do not satisfy the policy of entry '{entry.name}'"
                )
            return copy_entry(entry)

    def current_value(
        self,
        instance_id: str,
        path: Iterable[str],
        *,
        principals: Iterable[str] = (),
        at: datetime | None = None,
    ) -> TimedValue | None:
        """The entry's reading at one instant, without copying the series."""
        with self._lock:
            entry = self._entry(instance_id, list(path))
            if not check_access(entry.policy, tuple(principals)):
                raise AccessDeniedError(
                    f"roles do not satisfy the policy of entry '{entry.name}'"
                )
            return current_value(entry, at if at is not None else self.now())

    def history(
        self,
        instance_id: str,
        path: Iterable[str],
        start: datetime,
        end: datetime,
        *,
        principals: Iterable[str] = (),
        at: datetime | None = None,
    ) -> list[TimedValue]:
        entry = self.entry_view(instance_id, path, principals)
        when = at if at is not None else self.now()
        return entry_history(entry, start, end, when)

    def instance_count(self) -> int:
        with self._lock:
            return len(self._order)

    def all_instances(self) -> list[InstanceSnapshot]:
        with self._lock:
            return [
                InstanceSnapshot(
                    iid,
                    self._instances[iid].type_name,
                    _filter_category(self._instances[iid].root, None, None),
                )
                for iid in self._order
            ]

    # -- replay & snapshots ----------------------------------------------------

    def apply_record(self, record: JournalRecord) -> None:
        """Re-apply a journaled mutation during replay (no re-journaling).

        Replayed records were validated when first written, so checks are
        not repeated; ids and sequence numbers are restored verbatim.
        """
        payload = record.payload
        if record.kind == KIND_INSTANCE:
            root = decode_component(payload["tree"])
            if not isinstance(root, Category):
                raise JournalError("instance record does not hold a category tree")
            self._admit(payload["instanceId"], payload["type"], root)
            self._ingest_seq = max(self._ingest_seq, payload.get("ingestSeq", 0))
        elif record.kind == KIND_VALUE:
            entry = self._entry(payload["instanceId"], list(payload["path"]))
            value = decode_scalar(payload["value"], entry.value_kind)
            tv = TimedValue(
                value=value,
                timestamp=parse_instant(payload["timestamp"]),
                expiry=(
                    parse_instant(payload["expiry"]) if payload.get("expiry") else None
                ),
                ingest_seq=payload["seq"],
            )
            self._insert_value(entry, tv)
            self._ingest_seq = max(self._ingest_seq, payload["seq"])
        elif record.kind == KIND_FORECAST:
            entry = self._entry(payload["instanceId"], list(payload["path"]))
            entry.forecasts.append(
                Forecast(
                    source_id=payload["source"],
                    created_at=parse_instant(payload["createdAt"]),
                    points=tuple(
                        (parse_instant(t), decode_scalar(v, entry.value_kind))
                        for t, v in payload["points"]
                    ),
                )
            )
        elif record.kind == KIND_PURGE:
            self._purge(parse_instant(payload["now"]))
        else:
            raise JournalError(f"unknown journal record kind '{record.kind}'")

    def canonical_state(self) -> dict:
        """A JSON-ready dump of the complete store state."""
        with self._lock:
            return {
                "nodeLocation": self._config.node_location,
                "ingestSeq": self._ingest_seq,
                "instances": [
                    {
                        "instanceId": iid,
                        "type": self._instances[iid].type_name,
                        "tree": encode_component(self._instances[iid].root),
                    }
                    for iid in self._order
                ],
            }


def _adapt_scalar(value: Any, kind: FieldKind) -> Any:
    """Decode wire-level spellings (ISO strings for Timestamp entries)."""
    if kind is FieldKind.TIMESTAMP and isinstance(value, str):
        try:
            return parse_instant(value)
        except ValueError:
            return value  # kind check will reject it
    return value


def _filter_category(
    category: Category,
    principals: tuple[str, ...] | None,
    at: datetime | None,
) -> Category:
    """Detached copy with policy-filtered entries and expired values hidden.

    ``principals=None`` skips access filtering (internal full dumps).
    """
    out = Category(
        name=category.name,
        references=list(category.references),
        instance_id=category.instance_id,
        source_type=category.source_type,
    )
    for child in category.children:
        if isinstance(child, Entry):
            if principals is not None and not check_access(child.policy, principals):
                continue
            values = child.values
            if at is not None:
                values = [tv for tv in values if not tv.expired(at)]
            out.children.append(copy_entry(child, values=list(values)))
        else:
            out.children.append(_filter_category(child, principals, at))
    return out
