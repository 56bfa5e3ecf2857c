"""Generic composite data model: categories, entries, timed values.

Every ingested instance becomes a tree of ``Category`` nodes whose leaves
are ``Entry`` objects. An entry owns a time series of ``TimedValue``s
(kept sorted by timestamp, ties broken by ingestion sequence), optional
``Forecast``s per external source, an optional numeric ``ValueRange`` and
an ``AccessPolicy``. The functions in this module are pure: they never
mutate their arguments and take the evaluation instant explicitly.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Iterable, Iterator, Sequence, Union

from .errors import AmbiguousPathError, UnknownEntryError
from .ndf.ast import FieldKind

Scalar = Union[str, float, bool, datetime]


@dataclass(frozen=True)
class TimedValue:
    """One observation: a scalar valid from ``timestamp`` until ``expiry``.

    ``expiry`` of ``None`` means the value never expires. ``ingest_seq``
    is the store-wide ingestion counter used to break timestamp ties.
    """

    value: Scalar
    timestamp: datetime
    expiry: datetime | None = None
    ingest_seq: int = 0

    def __post_init__(self) -> None:
        if self.expiry is not None and self.expiry < self.timestamp:
            raise ValueError("expiry must not precede the value timestamp")

    def expired(self, at: datetime) -> bool:
        return self.expiry is not None and self.expiry <= at


@dataclass(frozen=True)
class Forecast:
    """A prediction series from one external source.

    Points must be non-empty and strictly increasing in time. The newest
    forecast per source (by ``created_at``) is the active one.
    """

    source_id: str
    points: tuple[tuple[datetime, Scalar], ...]
    created_at: datetime

    def __post_init__(self) -> None:
        if not self.source_id:
            raise ValueError("forecast source must be non-empty")
        if not self.points:
            raise ValueError("forecast must contain at least one point")
        for earlier, later in zip(self.points, self.points[1:]):
            if later[0] <= earlier[0]:
                raise ValueError("forecast points must be strictly increasing in time")


@dataclass(frozen=True)
class ValueRange:
    lower: float
    upper: float

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise ValueError("range lower bound exceeds upper bound")

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class AccessPolicy:
    """Usage and placement restrictions for one entry.

    Empty ``agreed_usage`` means anyone may read; empty
    ``allowed_locations`` means the data may be stored anywhere.
    """

    agreed_usage: tuple[str, ...] = ()
    allowed_locations: tuple[str, ...] = ()
    default_expiry: timedelta | None = None


UNRESTRICTED = AccessPolicy()


@dataclass
class Entry:
    """A named leaf holding the time series for one field."""

    name: str
    value_kind: FieldKind
    unit: str = ""
    policy: AccessPolicy = UNRESTRICTED
    values: list[TimedValue] = field(default_factory=list)
    forecasts: list[Forecast] = field(default_factory=list)
    value_range: ValueRange | None = None

    def __post_init__(self) -> None:
        if self.value_range is not None and self.value_kind is not FieldKind.NUMBER:
            raise ValueError("value ranges apply to Number entries only")


@dataclass
class Category:
    """A named inner node; children are entries and sub-categories.

    ``source_type`` records the qualified type the category was created
    from, ``instance_id`` the stable identity of that instance.
    ``references`` holds instance ids of other categories this one points
    to without containing them.
    """

    name: str
    children: list[Component] = field(default_factory=list)
    references: list[str] = field(default_factory=list)
    instance_id: str = ""
    source_type: str = ""

    def entries(self) -> list[Entry]:
        return [c for c in self.children if isinstance(c, Entry)]

    def subcategories(self) -> list[Category]:
        return [c for c in self.children if isinstance(c, Category)]


Component = Union[Category, Entry]


# -- tree traversal ---------------------------------------------------------


def walk(component: Component) -> Iterator[Component]:
    """Depth-first, pre-order traversal of a component tree."""
    yield component
    if isinstance(component, Category):
        for child in component.children:
            yield from walk(child)


def iter_entries(component: Component) -> Iterator[Entry]:
    for node in walk(component):
        if isinstance(node, Entry):
            yield node


def find_categories(root: Category, source_type: str) -> list[Category]:
    """Categories in the tree (including the root) of the given type."""
    return [
        node
        for node in walk(root)
        if isinstance(node, Category) and node.source_type == source_type
    ]


def resolve_path(root: Category, path: Sequence[str]) -> Entry:
    """Resolve a dotted path of category names ending in an entry name.

    Raises ``UnknownEntryError`` when a segment does not exist and
    ``AmbiguousPathError`` when a segment matches several same-named
    sibling categories.
    """
    if not path:
        raise UnknownEntryError("empty entry path")
    node = root
    for segment in path[:-1]:
        matches = [c for c in node.subcategories() if c.name == segment]
        if not matches:
            raise UnknownEntryError(
                f"no category '{segment}' under '{node.name}'"
            )
        if len(matches) > 1:
            raise AmbiguousPathError(
                f"category name '{segment}' is ambiguous under '{node.name}'; "
                "address the instance by its id instead"
            )
        node = matches[0]
    leaf = path[-1]
    for child in node.children:
        if isinstance(child, Entry) and child.name == leaf:
            return child
    raise UnknownEntryError(f"no entry '{leaf}' under '{node.name}'")


# -- value selection --------------------------------------------------------


def current_value(entry: Entry, at: datetime) -> TimedValue | None:
    """The most recent value at instant ``at``.

    Candidates are values with ``timestamp <= at`` that have not expired
    by ``at``; the greatest timestamp wins and timestamp ties go to the
    later ingestion. Returns ``None`` when nothing qualifies. Walking
    back from the bisection point keeps the cost proportional to the
    expired tail instead of the series length.
    """
    values = entry.values
    hi = bisect.bisect_right(values, at, key=lambda tv: tv.timestamp)
    for idx in range(hi - 1, -1, -1):
        if not values[idx].expired(at):
            return values[idx]
    return None


def history(
    entry: Entry, start: datetime, end: datetime, at: datetime
) -> list[TimedValue]:
    """Values with ``start <= timestamp <= end``, oldest first.

    Values already expired at ``at`` are hidden (they still exist until
    purged, but are not readable). Raises ``ValueError`` when the window
    is inverted.
    """
    if start > end:
        raise ValueError("history window start exceeds end")
    values = entry.values
    lo = bisect.bisect_left(values, start, key=lambda tv: tv.timestamp)
    hi = bisect.bisect_right(values, end, key=lambda tv: tv.timestamp)
    return [tv for tv in values[lo:hi] if not tv.expired(at)]


def active_forecast(entry: Entry, source_id: str) -> Forecast | None:
    """The newest forecast from ``source_id``, ties going to the later one."""
    best: Forecast | None = None
    for fc in entry.forecasts:
        if fc.source_id != source_id:
            continue
        if best is None or fc.created_at >= best.created_at:
            best = fc
    return best


# -- policy checks ----------------------------------------------------------


def check_access(policy: AccessPolicy, principals: Iterable[str]) -> bool:
    """True when the caller may read data under this policy.

    An empty ``agreed_usage`` list places no restriction; otherwise at
    least one of the caller's roles must be agreed.
    """
    if not policy.agreed_usage:
        return True
    allowed = set(policy.agreed_usage)
    return any(p in allowed for p in principals)


def check_storage_location(policy: AccessPolicy, node_location: str) -> bool:
    """True when data under this policy may be stored at ``node_location``."""
    if not policy.allowed_locations:
        return True
    return node_location in policy.allowed_locations


# -- scalar kinds -----------------------------------------------------------


def scalar_kind(value: object) -> FieldKind | None:
    """The entry kind a raw scalar belongs to, or ``None`` if unsupported.

    ``bool`` is checked before numbers because it subclasses ``int``.
    """
    if isinstance(value, bool):
        return FieldKind.BOOLEAN
    if isinstance(value, (int, float)):
        return FieldKind.NUMBER
    if isinstance(value, str):
        return FieldKind.TEXT
    if isinstance(value, datetime):
        return FieldKind.TIMESTAMP
    return None


def normalize_scalar(value: Scalar) -> Scalar:
    """Canonical in-store representation (integers become floats)."""
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return float(value)
    return value


def copy_entry(entry: Entry, *, values: list[TimedValue] | None = None) -> Entry:
    """A detached copy, optionally with a filtered value list."""
    return Entry(
        name=entry.name,
        value_kind=entry.value_kind,
        unit=entry.unit,
        policy=entry.policy,
        values=list(entry.values) if values is None else values,
        forecasts=list(entry.forecasts),
        value_range=entry.value_range,
    )
