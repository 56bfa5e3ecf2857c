"""One integration node: registry + store + journal, typed façade on top.

``NimNode`` owns a model registry and a store sharing one clock and one
journal. Opening a node over an existing data directory replays the
journal first — registered models come back before the data records
that depend on them — and then resumes appending. All typed operations
(ingest, query, entry reads and writes) resolve names through the
registry and convert between documents and the generic trees.
"""

from __future__ import annotations

from datetime import datetime
from typing import Any, Iterable, Mapping

from . import builtins as builtin_models
from .errors import (
    IngestRejected,
    JournalError,
    UnknownInstanceError,
    VirtualTypeError,
)
from .metamodel import TimedValue, active_forecast
from .registry import AdapterDescriptor, ModelRegistry, RegistrationResult
from .serde import canonical_json, encode_component, encode_scalar
from .store import (
    JOURNAL_FILENAME,
    KIND_MODEL,
    AppendResult,
    Journal,
    JournalRecord,
    Store,
    StoreConfig,
)
from .transform import (
    ConcreteInstance,
    build_entry_meta,
    from_generic,
    resolve_mapping,
    to_generic,
    validate_document,
)
from .util import format_instant, parse_instant


class NimNode:
    """A running integration node (everything but the HTTP layer)."""

    def __init__(self, config: StoreConfig, registry: ModelRegistry | None = None):
        self.config = config
        self.registry = registry or ModelRegistry(clock=config.clock)
        self.store = Store(config)
        self.journal_warning: str | None = None
        self._journal: Journal | None = None
        if config.data_dir is not None:
            path = config.data_dir / JOURNAL_FILENAME
            scan = Journal.read(path)
            self.journal_warning = scan.warning
            applied = 0
            truncate_at = scan.valid_bytes
            for record in scan.records:
                try:
                    self._replay(record)
                except Exception as exc:
                    # a record that decodes but no longer applies poisons
                    # everything after it; drop it from the file so later
                    # appends continue the sequence cleanly
                    self.journal_warning = (
                        f"journal replay stopped at record {record.seq}: {exc}"
                    )
                    truncate_at = scan.starts[applied]
                    break
                applied += 1
            next_seq = scan.records[applied - 1].seq + 1 if applied else 1
            self._journal = Journal(path, start_seq=next_seq, truncate_at=truncate_at)
            self.store.attach_journal(self._journal)
        self.registry.on_registered(self._record_registration)

    # -- lifecycle -----------------------------------------------------------

    def close(self) -> None:
        if self._journal is not None:
            self._journal.close()

    def _replay(self, record: JournalRecord) -> None:
        if record.kind == KIND_MODEL:
            result = self.registry.register_model(
                record.payload["source"],
                model_id=record.payload["modelId"],
                registered_at=parse_instant(record.payload["registeredAt"]),
            )
            if not result.ok:
                problems = "; ".join(d.message for d in result.diagnostics)
                raise JournalError(f"journaled model no longer registers: {problems}")
        else:
            self.store.apply_record(record)

    def _record_registration(self, model_id: str, source: str, when: datetime) -> None:
        if self._journal is not None:
            self._journal.append(
                KIND_MODEL,
                {
                    "modelId": model_id,
                    "source": source,
                    "registeredAt": format_instant(when),
                },
            )

    # -- models ---------------------------------------------------------------

    def register_model(self, source: str | bytes) -> RegistrationResult:
        return self.registry.register_model(source)

    def load_builtins(self) -> list[RegistrationResult]:
        return builtin_models.load_builtins(self)

    def list_models(self) -> list[AdapterDescriptor]:
        return self.registry.list_models()

    # -- typed operations -------------------------------------------------------

    def ingest(
        self,
        type_name: str,
        document: Mapping[str, Any],
        *,
        policies: Mapping[str, Mapping] | None = None,
        units: Mapping[str, str] | None = None,
        ranges: Mapping[str, Iterable[float]] | None = None,
    ) -> str:
        """Validate and store one document; returns the new instance id."""
        info = self.registry.resolve_type(type_name)
        qn = info.qualified_name
        if self.registry.is_virtual(qn):
            raise VirtualTypeError(
                f"type '{qn}' is mapping-defined and cannot be ingested directly"
            )
        instance = validate_document(info.type_def, document)
        violations = builtin_models.check_instance_tree(
            info.type_def, instance, self.store
        )
        if violations:
            raise IngestRejected("grid-connection", "; ".join(violations))
        meta = build_entry_meta(policies, units, ranges)
        root = to_generic(info.type_def, instance, self.store.now(), meta)
        return self.store.create_instance(qn, root)

    def query(
        self,
        type_name: str,
        principals: Iterable[str] = (),
        at: datetime | None = None,
    ) -> list[ConcreteInstance]:
        """All instances of a type; virtual types are materialised on demand."""
        info = self.registry.resolve_type(type_name)
        qn = info.qualified_name
        when = at if at is not None else self.store.now()
        if self.registry.is_virtual(qn):
            plan = self.registry.plan_for(qn)
            return resolve_mapping(plan, info.type_def, self.store, principals, when)
        return [
            from_generic(info.type_def, snap.root, when)
            for snap in self.store.query(qn, principals, when)
        ]

    def get_instance(
        self,
        type_name: str,
        instance_id: str,
        principals: Iterable[str] = (),
        at: datetime | None = None,
    ) -> ConcreteInstance:
        info = self.registry.resolve_type(type_name)
        qn = info.qualified_name
        when = at if at is not None else self.store.now()
        if self.registry.is_virtual(qn):
            plan = self.registry.plan_for(qn)
            for inst in resolve_mapping(plan, info.type_def, self.store, principals, when):
                if inst.instance_id == instance_id:
                    return inst
            raise UnknownInstanceError(
                f"no instance '{instance_id}' of type '{qn}'"
            )
        snap = self.store.get_instance(instance_id, principals, when)
        if snap.type_name != qn:
            raise UnknownInstanceError(
                f"instance '{instance_id}' is not of type '{qn}'"
            )
        return from_generic(info.type_def, snap.root, when)

    def _locate_entry(
        self, type_name: str, instance_id: str, field_path: str
    ) -> tuple[str, list[str]]:
        """Translate (type, instance, dotted field) to a physical entry.

        For virtual types the field is mapped back to the underlying
        source instance's entry via the compiled plan.
        """
        info = self.registry.resolve_type(type_name)
        qn = info.qualified_name
        path = field_path.split(".")
        if self.registry.is_virtual(qn):
            plan = self.registry.plan_for(qn)
            source_type = self.store.instance_type(instance_id)
            field_map = plan.field_maps().get(source_type)
            if field_map is None or len(path) != 1 or path[0] not in field_map:
                raise UnknownInstanceError(
                    f"instance '{instance_id}' does not back virtual type '{qn}'"
                )
            return instance_id, [field_map[path[0]]]
        actual = self.store.instance_type(instance_id)
        if actual != qn:
            raise UnknownInstanceError(
                f"instance '{instance_id}' is not of type '{qn}'"
            )
        return instance_id, path

    def append_value(
        self,
        type_name: str,
        instance_id: str,
        field_path: str,
        value: Any,
        *,
        timestamp: datetime | None = None,
        expiry: datetime | None = None,
    ) -> AppendResult:
        info = self.registry.resolve_type(type_name)
        if self.registry.is_virtual(info.qualified_name):
            raise VirtualTypeError(
                f"type '{info.qualified_name}' is mapping-defined and read-only"
            )
        iid, path = self._locate_entry(type_name, instance_id, field_path)
        return self.store.append_value(
            iid, path, value, timestamp=timestamp, expiry=expiry
        )

    def current_value(
        self,
        type_name: str,
        instance_id: str,
        field_path: str,
        principals: Iterable[str] = (),
        at: datetime | None = None,
    ) -> TimedValue | None:
        """One entry's reading at an instant (virtual fields follow the plan)."""
        iid, path = self._locate_entry(type_name, instance_id, field_path)
        return self.store.current_value(iid, path, principals=principals, at=at)

    def history(
        self,
        type_name: str,
        instance_id: str,
        field_path: str,
        start: datetime,
        end: datetime,
        principals: Iterable[str] = (),
        at: datetime | None = None,
    ):
        iid, path = self._locate_entry(type_name, instance_id, field_path)
        return self.store.history(
            iid, path, start, end, principals=principals, at=at
        )

    def add_forecast(
        self,
        type_name: str,
        instance_id: str,
        field_path: str,
        source_id: str,
        points: Iterable[tuple[datetime, Any]],
        *,
        created_at: datetime | None = None,
    ) -> AppendResult:
        info = self.registry.resolve_type(type_name)
        if self.registry.is_virtual(info.qualified_name):
            raise VirtualTypeError(
                f"type '{info.qualified_name}' is mapping-defined and read-only"
            )
        iid, path = self._locate_entry(type_name, instance_id, field_path)
        return self.store.add_forecast(
            iid, path, source_id, points, created_at=created_at
        )

    def forecasts(
        self,
        type_name: str,
        instance_id: str,
        field_path: str,
        principals: Iterable[str] = (),
        source_id: str | None = None,
    ) -> list[dict]:
        """Forecast series for an entry, each flagged active or superseded."""
        iid, path = self._locate_entry(type_name, instance_id, field_path)
        entry = self.store.entry_view(iid, path, principals)
        out = []
        for fc in entry.forecasts:
            if source_id is not None and fc.source_id != source_id:
                continue
            out.append(
                {
                    "source": fc.source_id,
                    "createdAt": format_instant(fc.created_at),
                    "active": active_forecast(entry, fc.source_id) is fc,
                    "points": [
                        {"t": format_instant(t), "v": encode_scalar(v)}
                        for t, v in fc.points
                    ],
                }
            )
        return out

    def purge(self, now: datetime | None = None) -> int:
        return self.store.purge_expired(now)

    # -- introspection -----------------------------------------------------------

    def generic_components(self) -> list[dict]:
        """Full dump of every stored tree (debug surface)."""
        return [
            {
                "instanceId": snap.instance_id,
                "type": snap.type_name,
                "tree": encode_component(snap.root),
            }
            for snap in self.store.all_instances()
        ]

    def canonical_snapshot(self) -> bytes:
        """Byte-exact serialization of all node state, for comparisons."""
        return canonical_json(
            {
                "models": [
                    {
                        "modelId": d.model_id,
                        "registeredAt": format_instant(d.registered_at),
                        "source": self.registry.model_source(d.model_id),
                    }
                    for d in self.registry.list_models()
                ],
                "store": self.store.canonical_state(),
            }
        )
