"""JSON encoding of component trees, shared by journal and snapshots.

The encoding is loss-free for everything the store owns: instance ids,
ingestion sequence numbers, policies, ranges, forecasts and timestamps
(rendered as ISO-8601 UTC). ``canonical_json`` fixes key order and
whitespace so equal states serialize to identical bytes.
"""

from __future__ import annotations

import json
from datetime import datetime, timedelta
from typing import Any

from .metamodel import (
    AccessPolicy,
    Category,
    Component,
    Entry,
    Forecast,
    TimedValue,
    ValueRange,
)
from .ndf.ast import FieldKind
from .util import format_instant, parse_instant


def encode_scalar(value: Any) -> Any:
    if isinstance(value, datetime):
        return format_instant(value)
    return value


def decode_scalar(raw: Any, kind: FieldKind) -> Any:
    if kind is FieldKind.TIMESTAMP and isinstance(raw, str):
        return parse_instant(raw)
    if kind is FieldKind.NUMBER and isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return float(raw)
    return raw


def encode_policy(policy: AccessPolicy) -> dict:
    return {
        "agreedUsage": list(policy.agreed_usage),
        "allowedLocations": list(policy.allowed_locations),
        "defaultExpirySeconds": (
            policy.default_expiry.total_seconds()
            if policy.default_expiry is not None
            else None
        ),
    }


def decode_policy(raw: dict) -> AccessPolicy:
    expiry = raw.get("defaultExpirySeconds")
    return AccessPolicy(
        agreed_usage=tuple(raw.get("agreedUsage") or ()),
        allowed_locations=tuple(raw.get("allowedLocations") or ()),
        default_expiry=timedelta(seconds=expiry) if expiry is not None else None,
    )


def encode_component(component: Component) -> dict:
    if isinstance(component, Entry):
        return {
            "component": "entry",
            "name": component.name,
            "valueKind": component.value_kind.value,
            "unit": component.unit,
            "policy": encode_policy(component.policy),
            "range": (
                [component.value_range.lower, component.value_range.upper]
                if component.value_range
                else None
            ),
            "values": [
                {
                    "value": encode_scalar(tv.value),
                    "timestamp": format_instant(tv.timestamp),
                    "expiry": format_instant(tv.expiry) if tv.expiry else None,
                    "seq": tv.ingest_seq,
                }
                for tv in component.values
            ],
            "forecasts": [
                {
                    "source": fc.source_id,
                    "createdAt": format_instant(fc.created_at),
                    "points": [
                        [format_instant(t), encode_scalar(v)] for t, v in fc.points
                    ],
                }
                for fc in component.forecasts
            ],
        }
    return {
        "component": "category",
        "name": component.name,
        "sourceType": component.source_type,
        "instanceId": component.instance_id,
        "references": list(component.references),
        "children": [encode_component(c) for c in component.children],
    }


def decode_component(raw: dict) -> Component:
    if raw["component"] == "entry":
        kind = FieldKind(raw["valueKind"])
        rng = raw.get("range")
        return Entry(
            name=raw["name"],
            value_kind=kind,
            unit=raw.get("unit", ""),
            policy=decode_policy(raw.get("policy") or {}),
            value_range=ValueRange(rng[0], rng[1]) if rng else None,
            values=[
                TimedValue(
                    value=decode_scalar(v["value"], kind),
                    timestamp=parse_instant(v["timestamp"]),
                    expiry=parse_instant(v["expiry"]) if v.get("expiry") else None,
                    ingest_seq=v.get("seq", 0),
                )
                for v in raw.get("values", ())
            ],
            forecasts=[
                Forecast(
                    source_id=f["source"],
                    created_at=parse_instant(f["createdAt"]),
                    points=tuple(
                        (parse_instant(t), decode_scalar(v, kind))
                        for t, v in f.get("points", ())
                    ),
                )
                for f in raw.get("forecasts", ())
            ],
        )
    return Category(
        name=raw["name"],
        source_type=raw.get("sourceType", ""),
        instance_id=raw.get("instanceId", ""),
        references=list(raw.get("references") or ()),
        children=[decode_component(c) for c in raw.get("children", ())],
    )


def canonical_json(obj: Any) -> bytes:
    """Deterministic compact JSON bytes for state comparison."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
