"""Syntax tree for the NDF schema language.

All nodes are frozen dataclasses. Source positions (``line``/``column``,
1-based) are carried for diagnostics but excluded from equality, so two
models parsed from differently formatted text compare equal when they
describe the same schema.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator


class FieldKind(enum.Enum):
    """Primitive value kinds a field (and later an entry) can hold."""

    TEXT = "Text"
    NUMBER = "Number"
    BOOLEAN = "Boolean"
    TIMESTAMP = "Timestamp"


#: source keyword -> kind (``String`` is the text keyword in the language)
KEYWORD_KINDS: dict[str, FieldKind] = {
    "String": FieldKind.TEXT,
    "Number": FieldKind.NUMBER,
    "Boolean": FieldKind.BOOLEAN,
    "Timestamp": FieldKind.TIMESTAMP,
}

KIND_KEYWORDS: dict[FieldKind, str] = {v: k for k, v in KEYWORD_KINDS.items()}

#: words that cannot be used as type or field names
RESERVED_WORDS = frozenset(KEYWORD_KINDS) | {"package"}


@dataclass(frozen=True)
class FieldDef:
    name: str
    kind: FieldKind
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class TypeDef:
    """A type declaration: primitive fields plus nested type declarations.

    ``qualified_name`` is the dotted path from the package root down to
    this type (``pkg.Outer.Inner``); it is assigned by the parser and,
    like positions, ignored for equality.
    """

    name: str
    fields: tuple[FieldDef, ...] = ()
    nested: tuple[TypeDef, ...] = ()
    qualified_name: str = field(default="", compare=False)
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)

    def field_map(self) -> dict[str, FieldDef]:
        return {f.name: f for f in self.fields}

    def walk(self) -> Iterator[TypeDef]:
        """This type and all nested types, depth-first, declaration order."""
        yield self
        for inner in self.nested:
            yield from inner.walk()


@dataclass(frozen=True)
class SourceRef:
    """One alternative on the right-hand side of a mapping rule."""

    type_name: str
    field_name: str
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class MappingRule:
    """``Target.field := SourceA.a | SourceB.b ;``

    Source alternatives keep their written order; each contributes the
    named field of every instance of its type to the target.
    """

    target_type: str
    target_field: str
    sources: tuple[SourceRef, ...]
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class NdfModel:
    """A parsed model file: optional package, type declarations, mappings."""

    package: str = ""
    types: tuple[TypeDef, ...] = ()
    mappings: tuple[MappingRule, ...] = ()
    source_text: str = field(default="", compare=False)
    model_id: str = field(default="", compare=False)

    def all_types(self) -> Iterator[TypeDef]:
        """All declared types (top-level and nested), depth-first."""
        for td in self.types:
            yield from td.walk()


@dataclass(frozen=True)
class Diagnostic:
    """A positioned message produced by parsing or semantic checking."""

    severity: str  # "error" | "warning"
    code: str
    message: str
    line: int = 0
    column: int = 0

    def render(self) -> str:
        return f"{self.line}:{self.column}: {self.severity} [{self.code}] {self.message}"

    def to_dict(self) -> dict:
        return {
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
            "line": self.line,
            "column": self.column,
        }
