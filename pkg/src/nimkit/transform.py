"""Conversions between typed documents and generic component trees.

``validate_document`` turns a raw JSON-style mapping into a typed
``ConcreteInstance`` or reports every shape violation at once.
``to_generic``/``from_generic`` convert between typed instances and the
category/entry trees the store holds; they are inverses for freshly
ingested data. ``build_plans`` compiles mapping rules into per-source
field maps (expanding chains through virtual types), and
``resolve_mapping`` materialises a virtual type's instances on demand:
one result instance per live source instance, in source registration
then ingestion order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Iterable, Mapping

from .errors import SchemaViolation, TransformError
from .metamodel import (
    UNRESTRICTED,
    AccessPolicy,
    Category,
    Entry,
    TimedValue,
    ValueRange,
    current_value,
)
from .ndf.ast import Diagnostic, FieldKind, TypeDef
from .ndf.symbols import SymbolTable
from .util import format_instant, parse_instant

#: key allowed in documents without being declared (echoed on output)
ID_KEY = "_id"


@dataclass(frozen=True)
class ConcreteInstance:
    """A typed instance: scalar fields plus tuples of nested instances.

    ``instance_id`` identifies the stored original and is ignored for
    equality, so round-tripped instances compare equal to their inputs.
    """

    type_name: str
    fields: Mapping[str, Any]
    instance_id: str = field(default="", compare=False)


@dataclass(frozen=True)
class EntryMeta:
    """Optional per-entry settings supplied at ingestion time.

    Keys into the meta mapping are dotted paths of nested type names
    ending in a field name (``roomName``, ``Room.roomName``); a path
    applies to every instance of that nested type.
    """

    unit: str = ""
    policy: AccessPolicy = UNRESTRICTED
    value_range: ValueRange | None = None


_NO_META = EntryMeta()


# -- document validation -----------------------------------------------------


def validate_document(type_def: TypeDef, document: Mapping[str, Any]) -> ConcreteInstance:
    """Check a raw document against the type shape; all errors at once."""
    errors: list[str] = []
    instance = _validate(type_def, document, "", errors)
    if errors:
        raise SchemaViolation(errors)
    return instance


def _validate(
    type_def: TypeDef, document: Any, path: str, errors: list[str]
) -> ConcreteInstance:
    where = path or type_def.name
    if not isinstance(document, Mapping):
        errors.append(f"{where}: expected an object")
        return ConcreteInstance(type_def.qualified_name, {})
    declared = {f.name for f in type_def.fields} | {n.name for n in type_def.nested}
    for key in document:
        if key not in declared and key != ID_KEY:
            errors.append(f"{where}: unknown field '{key}'")
    supplied_id = document.get(ID_KEY)
    if supplied_id is not None and not isinstance(supplied_id, str):
        errors.append(f"{where}: {ID_KEY} must be a string")
        supplied_id = None
    fields: dict[str, Any] = {}
    for fd in type_def.fields:
        fpath = f"{path}{fd.name}" if not path else f"{path}.{fd.name}"
        if fd.name not in document:
            errors.append(f"{fpath}: missing required field")
            continue
        coerced = _coerce(document[fd.name], fd.kind)
        if coerced is _BAD:
            errors.append(f"{fpath}: expected a {fd.kind.value} value")
            continue
        fields[fd.name] = coerced
    for nt in type_def.nested:
        npath = f"{path}.{nt.name}" if path else nt.name
        raw = document.get(nt.name, [])
        if not isinstance(raw, (list, tuple)):
            errors.append(f"{npath}: expected a list of objects")
            fields[nt.name] = ()
            continue
        subs = []
        for idx, item in enumerate(raw):
            subs.append(_validate(nt, item, f"{npath}[{idx}]", errors))
        fields[nt.name] = tuple(subs)
    return ConcreteInstance(
        type_def.qualified_name, fields, instance_id=supplied_id or ""
    )


_BAD = object()


def _coerce(value: Any, kind: FieldKind) -> Any:
    if kind is FieldKind.BOOLEAN:
        return value if isinstance(value, bool) else _BAD
    if kind is FieldKind.NUMBER:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return _BAD
        return float(value)
    if kind is FieldKind.TEXT:
        return value if isinstance(value, str) else _BAD
    if kind is FieldKind.TIMESTAMP:
        if isinstance(value, datetime):
            return value
        if isinstance(value, str):
            try:
                return parse_instant(value)
            except ValueError:
                return _BAD
        return _BAD
    return _BAD


def instance_to_document(instance: ConcreteInstance) -> dict[str, Any]:
    """Render an instance as a plain JSON-ready document."""
    doc: dict[str, Any] = {}
    if instance.instance_id:
        doc[ID_KEY] = instance.instance_id
    for name, value in instance.fields.items():
        if isinstance(value, tuple) and all(
            isinstance(v, ConcreteInstance) for v in value
        ):
            doc[name] = [instance_to_document(v) for v in value]
        elif isinstance(value, datetime):
            doc[name] = format_instant(value)
        else:
            doc[name] = value
    return doc


# -- typed <-> generic -------------------------------------------------------


def to_generic(
    type_def: TypeDef,
    instance: ConcreteInstance,
    ingest_time: datetime,
    meta: Mapping[str, EntryMeta] | None = None,
) -> Category:
    """Build the category tree for a validated instance.

    The category is named after the lowercased simple type name; each
    field becomes an entry carrying the field value as its first timed
    value; nested instances become child categories in document order.
    """
    meta = meta or {}
    return _build_category(type_def, instance, ingest_time, meta, "")


def _build_category(
    type_def: TypeDef,
    instance: ConcreteInstance,
    ingest_time: datetime,
    meta: Mapping[str, EntryMeta],
    prefix: str,
) -> Category:
    cat = Category(
        name=type_def.name.lower(),
        source_type=type_def.qualified_name,
        instance_id=instance.instance_id,
    )
    for fd in type_def.fields:
        em = meta.get(f"{prefix}{fd.name}", _NO_META)
        entry = Entry(
            name=fd.name,
            value_kind=fd.kind,
            unit=em.unit,
            policy=em.policy,
            value_range=em.value_range,
        )
        if fd.name in instance.fields:
            expiry = None
            if em.policy.default_expiry is not None:
                expiry = ingest_time + em.policy.default_expiry
            entry.values.append(
                TimedValue(
                    value=instance.fields[fd.name],
                    timestamp=ingest_time,
                    expiry=expiry,
                )
            )
        cat.children.append(entry)
    for nt in type_def.nested:
        for sub in instance.fields.get(nt.name, ()):
            cat.children.append(
                _build_category(nt, sub, ingest_time, meta, f"{prefix}{nt.name}.")
            )
    return cat


def from_generic(type_def: TypeDef, category: Category, at: datetime) -> ConcreteInstance:
    """Read a typed instance back out of a category tree.

    Fields whose entry is missing (access-filtered) or has no readable
    value at ``at`` are simply absent from the result.
    """
    if category.source_type != type_def.qualified_name:
        raise TransformError(
            f"category was created from '{category.source_type}', "
            f"not '{type_def.qualified_name}'"
        )
    fields: dict[str, Any] = {}
    entries = {e.name: e for e in category.entries()}
    for fd in type_def.fields:
        entry = entries.get(fd.name)
        if entry is None:
            continue
        tv = current_value(entry, at)
        if tv is not None:
            fields[fd.name] = tv.value
    for nt in type_def.nested:
        subs = [
            c for c in category.subcategories() if c.source_type == nt.qualified_name
        ]
        fields[nt.name] = tuple(from_generic(nt, sub, at) for sub in subs)
    return ConcreteInstance(
        type_def.qualified_name, fields, instance_id=category.instance_id
    )


def build_entry_meta(
    policies: Mapping[str, Mapping] | None = None,
    units: Mapping[str, str] | None = None,
    ranges: Mapping[str, Iterable[float]] | None = None,
) -> dict[str, EntryMeta]:
    """Combine the wire-level policy/unit/range maps into ``EntryMeta``."""
    from .serde import decode_policy

    out: dict[str, EntryMeta] = {}
    for path in set(policies or ()) | set(units or ()) | set(ranges or ()):
        policy = decode_policy(dict((policies or {}).get(path) or {}))
        rng = (ranges or {}).get(path)
        pair = list(rng) if rng is not None else None
        out[path] = EntryMeta(
            unit=(units or {}).get(path, ""),
            policy=policy,
            value_range=ValueRange(pair[0], pair[1]) if pair else None,
        )
    return out


# -- mapping plans ------------------------------------------------------------


@dataclass(frozen=True)
class MappingPlan:
    """Compiled recipe for materialising one virtual type.

    ``per_source`` lists every concrete source type that fully covers
    the target, ordered by registration, together with the target-field
    to source-field map (target field declaration order).
    """

    target: str
    per_source: tuple[tuple[str, tuple[tuple[str, str], ...]], ...]

    def field_maps(self) -> dict[str, dict[str, str]]:
        return {src: dict(pairs) for src, pairs in self.per_source}

    def source_types(self) -> tuple[str, ...]:
        return tuple(src for src, _ in self.per_source)


def build_plans(
    targets: Iterable[str],
    symbols: SymbolTable,
    known_plans: Mapping[str, MappingPlan] | None = None,
) -> tuple[dict[str, MappingPlan], list[Diagnostic]]:
    """Compile plans for the given virtual targets.

    Sources that cover only part of a target's fields are excluded with
    a warning — union semantics materialise whole instances, never
    half-filled ones. Virtual sources are expanded transitively into the
    concrete types behind them (a chain A<-B<-C reads C directly); when
    expansion reaches the same concrete type along several chains, the
    shortest chain encountered first wins.
    """
    memo: dict[str, MappingPlan] = dict(known_plans or {})
    diags: list[Diagnostic] = []
    built: dict[str, MappingPlan] = {}
    for target in targets:
        built[target] = _plan_for(target, symbols, memo, diags)
    return built, diags


def _plan_for(
    target: str,
    symbols: SymbolTable,
    memo: dict[str, MappingPlan],
    diags: list[Diagnostic],
) -> MappingPlan:
    if target in memo:
        return memo[target]
    info = symbols.lookup(target)
    needed = [f.name for f in info.type_def.fields]

    by_source: dict[str, dict[str, str]] = {}
    for rule in symbols.rules_for(target):
        for source_qn, source_field in rule.sources:
            fmap = by_source.setdefault(source_qn, {})
            # first alternative of a rule wins for its source type
            fmap.setdefault(rule.target_field, source_field)

    covering: list[str] = []
    for source_qn, fmap in by_source.items():
        if set(fmap) >= set(needed):
            covering.append(source_qn)
        else:
            missing = [f for f in needed if f not in fmap]
            diags.append(
                Diagnostic(
                    "warning",
                    "plan",
                    f"source '{source_qn}' covers only part of '{target}' "
                    f"(missing: {', '.join(missing)}); excluded from the plan",
                )
            )
    covering.sort(key=symbols.type_order)

    resolved: dict[str, dict[str, str]] = {}
    for source_qn in covering:
        fmap = by_source[source_qn]
        if symbols.is_virtual(source_qn):
            sub = _plan_for(source_qn, symbols, memo, diags)
            for concrete, sub_pairs in sub.per_source:
                sub_map = dict(sub_pairs)
                composed = {tf: sub_map[sf] for tf, sf in fmap.items()}
                resolved.setdefault(concrete, composed)
        else:
            resolved.setdefault(source_qn, dict(fmap))

    ordered = sorted(resolved, key=symbols.type_order)
    plan = MappingPlan(
        target=target,
        per_source=tuple(
            (src, tuple((tf, resolved[src][tf]) for tf in needed)) for src in ordered
        ),
    )
    memo[target] = plan
    return plan


def resolve_mapping(
    plan: MappingPlan,
    target_def: TypeDef,
    store,
    principals: Iterable[str] = (),
    at: datetime | None = None,
) -> list[ConcreteInstance]:
    """Materialise the virtual type: one instance per source instance.

    Source types are visited in registration order, their instances in
    ingestion order; each result keeps the source's instance id. Fields
    whose source entry is unreadable (policy) or has no current value
    are left out.
    """
    principals = tuple(principals)
    when = at if at is not None else store.now()
    results: list[ConcreteInstance] = []
    for source_qn, pairs in plan.per_source:
        fmap = dict(pairs)
        for snap in store.query(source_qn, principals=principals, at=when):
            fields: dict[str, Any] = {}
            entries = {e.name: e for e in snap.root.entries()}
            for fd in target_def.fields:
                entry = entries.get(fmap[fd.name])
                if entry is None:
                    continue
                tv = current_value(entry, when)
                if tv is not None:
                    fields[fd.name] = tv.value
            for nt in target_def.nested:
                fields[nt.name] = ()
            results.append(
                ConcreteInstance(
                    target_def.qualified_name, fields, instance_id=snap.instance_id
                )
            )
    return results
