"""Symbol table over all registered models, plus type-name resolution.

Resolution order for a (possibly dotted) name is fixed:

1. types declared in the context model itself,
2. registered types in the same package,
3. the whole registry.

At each step an exact qualified-name match wins over suffix matches;
a name matching more than one type at the deciding step is an error,
never a silent pick. Suffix matches only bind at dot boundaries, so
``Room`` matches ``a.b.Room`` but not ``a.b.BoilerRoom``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from ..errors import NameResolutionError
from .ast import NdfModel, TypeDef


@dataclass(frozen=True)
class TypeInfo:
    qualified_name: str
    type_def: TypeDef
    model_id: str
    package: str
    order: int  # global registration order, used for deterministic plans


@dataclass(frozen=True)
class ResolvedRule:
    """A mapping rule with every name resolved to a qualified type."""

    target: str
    target_field: str
    sources: tuple[tuple[str, str], ...]  # (qualified source type, field)


class SymbolTable:
    """All types, resolved mapping rules and virtual flags, by model."""

    def __init__(self) -> None:
        self._types: dict[str, TypeInfo] = {}
        self._models: list[NdfModel] = []
        self._rules: list[ResolvedRule] = []
        self._virtual: set[str] = set()
        self._order = 0

    # -- population ------------------------------------------------------

    def add_model(
        self,
        model: NdfModel,
        rules: Iterable[ResolvedRule],
        virtual: Iterable[str],
    ) -> None:
        """Publish a checked model. Caller guarantees no name clashes."""
        for td in model.all_types():
            self._types[td.qualified_name] = TypeInfo(
                qualified_name=td.qualified_name,
                type_def=td,
                model_id=model.model_id,
                package=model.package,
                order=self._order,
            )
            self._order += 1
        self._models.append(model)
        self._rules.extend(rules)
        self._virtual.update(virtual)

    # -- queries -----------------------------------------------------------

    def __contains__(self, qualified_name: str) -> bool:
        return qualified_name in self._types

    def lookup(self, qualified_name: str) -> TypeInfo | None:
        return self._types.get(qualified_name)

    def qualified_names(self) -> Iterator[str]:
        return iter(tuple(self._types))

    def types_in_package(self, package: str) -> list[str]:
        return [qn for qn, info in self._types.items() if info.package == package]

    def type_order(self, qualified_name: str) -> int:
        return self._types[qualified_name].order

    def is_virtual(self, qualified_name: str) -> bool:
        return qualified_name in self._virtual

    def virtual_types(self) -> frozenset[str]:
        return frozenset(self._virtual)

    def all_rules(self) -> tuple[ResolvedRule, ...]:
        return tuple(self._rules)

    def rules_for(self, target: str) -> list[ResolvedRule]:
        return [r for r in self._rules if r.target == target]

    @property
    def models(self) -> tuple[NdfModel, ...]:
        return tuple(self._models)


def match_candidates(name: str, qualified_names: Iterable[str]) -> list[str]:
    """Qualified names matched by ``name``: exact first, else dot-suffix."""
    pool = list(qualified_names)
    exact = [qn for qn in pool if qn == name]
    if exact:
        return exact
    suffix = "." + name
    return [qn for qn in pool if qn.endswith(suffix)]


def resolve_name(
    name: str, context: NdfModel | None, symbols: SymbolTable
) -> str:
    """Resolve ``name`` to a qualified type name, or raise.

    Raises ``NameResolutionError`` with reason ``"unresolved"`` or
    ``"ambiguous"``.
    """
    if context is not None:
        local = [td.qualified_name for td in context.all_types()]
        hits = match_candidates(name, local)
        if len(hits) == 1:
            return hits[0]
        if len(hits) > 1:
            raise NameResolutionError(name, "ambiguous", tuple(sorted(hits)))

        same_pkg = symbols.types_in_package(context.package)
        hits = match_candidates(name, same_pkg)
        if len(hits) == 1:
            return hits[0]
        if len(hits) > 1:
            raise NameResolutionError(name, "ambiguous", tuple(sorted(hits)))

    hits = match_candidates(name, symbols.qualified_names())
    if len(hits) == 1:
        return hits[0]
    if len(hits) > 1:
        raise NameResolutionError(name, "ambiguous", tuple(sorted(hits)))
    raise NameResolutionError(name, "unresolved")
