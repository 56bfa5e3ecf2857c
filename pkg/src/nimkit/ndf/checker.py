"""Semantic checks applied to a parsed model before registration.

Each condition has a stable code so callers and tests can match on it:

* ``CC1`` — type names are unique within their package across the whole
  registry (top-level types; nested names are scoped by their parent).
* ``CC2`` — member names (fields and nested types) are unique within a
  type declaration.
* ``CC3`` — a mapping target names a top-level type declared in *this*
  model, and the named field exists on it.
* ``CC4`` — every mapping source resolves to exactly one known type
  (this model or the registry) that declares the named field.
* ``CC5`` — a mapping source field has the same kind as its target field.
* ``CC6`` — the mapping dependency graph (target type depends on its
  source types) is acyclic, including rules of already-registered models.
* ``CC7`` — a mapped (virtual) type has every one of its fields covered
  by some rule; partially mapped types cannot be materialised.
* ``CC0`` — structural rule problems: two rules for the same target field.

``analyze`` returns the diagnostics together with the resolved rules and
the set of virtual type names, so registration does not resolve twice.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import NameResolutionError
from .ast import Diagnostic, MappingRule, NdfModel, TypeDef
from .symbols import ResolvedRule, SymbolTable, match_candidates, resolve_name


@dataclass
class Analysis:
    diagnostics: list[Diagnostic]
    resolved_rules: list[ResolvedRule]
    virtual_types: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not any(d.severity == "error" for d in self.diagnostics)


def check_context_conditions(model: NdfModel, symbols: SymbolTable) -> list[Diagnostic]:
    return analyze(model, symbols).diagnostics


def analyze(model: NdfModel, symbols: SymbolTable) -> Analysis:
    diags: list[Diagnostic] = []
    local_types = {td.qualified_name: td for td in model.all_types()}
    top_level = {td.qualified_name for td in model.types}

    _check_unique_type_names(model, symbols, diags)
    for td in model.all_types():
        _check_unique_members(td, diags)

    rules, virtual = _check_mappings(model, symbols, local_types, top_level, diags)
    _check_acyclic(model, symbols, rules, diags)
    _check_full_coverage(model, local_types, rules, virtual, diags)

    ordered_virtual = tuple(
        qn for qn in (td.qualified_name for td in model.types) if qn in virtual
    )
    return Analysis(diags, rules, ordered_virtual)


# -- individual conditions ---------------------------------------------------


def _check_unique_type_names(
    model: NdfModel, symbols: SymbolTable, diags: list[Diagnostic]
) -> None:
    seen: set[str] = set()
    for td in model.types:
        qn = td.qualified_name
        if qn in seen:
            diags.append(
                Diagnostic(
                    "error",
                    "CC1",
                    f"type '{qn}' is declared more than once in this model",
                    td.line,
                    td.column,
                )
            )
        elif qn in symbols:
            info = symbols.lookup(qn)
            diags.append(
                Diagnostic(
                    "error",
                    "CC1",
                    f"type '{qn}' is already registered (model {info.model_id or '?'})",
                    td.line,
                    td.column,
                )
            )
        seen.add(qn)


def _check_unique_members(td: TypeDef, diags: list[Diagnostic]) -> None:
    seen: dict[str, str] = {}
    members = [(f.name, "field", f.line, f.column) for f in td.fields]
    members += [(n.name, "nested type", n.line, n.column) for n in td.nested]
    members.sort(key=lambda m: (m[2], m[3]))
    for name, what, line, column in members:
        if name in seen:
            diags.append(
                Diagnostic(
                    "error",
                    "CC2",
                    f"{what} '{name}' clashes with another member of type '{td.name}'",
                    line,
                    column,
                )
            )
        else:
            seen[name] = what


def _check_mappings(
    model: NdfModel,
    symbols: SymbolTable,
    local_types: dict[str, TypeDef],
    top_level: set[str],
    diags: list[Diagnostic],
) -> tuple[list[ResolvedRule], set[str]]:
    rules: list[ResolvedRule] = []
    virtual: set[str] = set()
    claimed: set[tuple[str, str]] = set()

    for rule in model.mappings:
        target_qn = _resolve_target(rule, local_types, diags)
        if target_qn is None:
            continue
        if target_qn not in top_level:
            diags.append(
                Diagnostic(
                    "error",
                    "CC3",
                    f"mapping target '{rule.target_type}' must be a top-level type",
                    rule.line,
                    rule.column,
                )
            )
            continue
        target_td = local_types[target_qn]
        target_field = target_td.field_map().get(rule.target_field)
        if target_field is None:
            diags.append(
                Diagnostic(
                    "error",
                    "CC3",
                    f"type '{rule.target_type}' has no field '{rule.target_field}'",
                    rule.line,
                    rule.column,
                )
            )
            continue
        key = (target_qn, rule.target_field)
        if key in claimed:
            diags.append(
                Diagnostic(
                    "error",
                    "CC0",
                    f"duplicate mapping for '{rule.target_type}.{rule.target_field}'",
                    rule.line,
                    rule.column,
                )
            )
            continue
        claimed.add(key)

        sources: list[tuple[str, str]] = []
        rule_ok = True
        for ref in rule.sources:
            try:
                source_qn = resolve_name(ref.type_name, model, symbols)
            except NameResolutionError as exc:
                diags.append(
                    Diagnostic("error", "CC4", str(exc), ref.line, ref.column)
                )
                rule_ok = False
                continue
            source_td = local_types.get(source_qn)
            if source_td is None:
                source_td = symbols.lookup(source_qn).type_def
            source_field = source_td.field_map().get(ref.field_name)
            if source_field is None:
                diags.append(
                    Diagnostic(
                        "error",
                        "CC4",
                        f"type '{source_qn}' has no field '{ref.field_name}'",
                        ref.line,
                        ref.column,
                    )
                )
                rule_ok = False
                continue
            if source_field.kind is not target_field.kind:
                diags.append(
                    Diagnostic(
                        "error",
                        "CC5",
                        f"source '{ref.type_name}.{ref.field_name}' has kind "
                        f"{source_field.kind.value}, target field "
                        f"'{rule.target_field}' expects {target_field.kind.value}",
                        ref.line,
                        ref.column,
                    )
                )
                rule_ok = False
                continue
            sources.append((source_qn, ref.field_name))

        virtual.add(target_qn)
        if rule_ok:
            rules.append(
                ResolvedRule(
                    target=target_qn,
                    target_field=rule.target_field,
                    sources=tuple(sources),
                )
            )
    return rules, virtual


def _resolve_target(
    rule: MappingRule, local_types: dict[str, TypeDef], diags: list[Diagnostic]
) -> str | None:
    # Targets must live in the registering model itself; only local types
    # are searched, so the diagnostic stays CC3 rather than CC4.
    hits = match_candidates(rule.target_type, local_types)
    if len(hits) == 1:
        return hits[0]
    if len(hits) > 1:
        message = (
            f"mapping target '{rule.target_type}' is ambiguous in this model: "
            + ", ".join(sorted(hits))
        )
    else:
        message = (
            f"mapping target '{rule.target_type}' is not defined in this model"
        )
    diags.append(Diagnostic("error", "CC3", message, rule.line, rule.column))
    return None


def _check_acyclic(
    model: NdfModel,
    symbols: SymbolTable,
    local_rules: list[ResolvedRule],
    diags: list[Diagnostic],
) -> None:
    adjacency: dict[str, set[str]] = {}
    for rule in list(symbols.all_rules()) + local_rules:
        adjacency.setdefault(rule.target, set()).update(s for s, _ in rule.sources)

    reported: set[str] = set()
    for rule in local_rules:
        if rule.target in reported:
            continue
        # a cycle through the target exists iff some direct source reaches it
        for source, _ in rule.sources:
            if source == rule.target or _can_reach(adjacency, source, rule.target):
                position = _first_rule_position(model, rule.target)
                diags.append(
                    Diagnostic(
                        "error",
                        "CC6",
                        f"mapping for '{rule.target}' participates in a dependency cycle",
                        position[0],
                        position[1],
                    )
                )
                reported.add(rule.target)
                break


def _can_reach(adjacency: dict[str, set[str]], start: str, goal: str) -> bool:
    stack, seen = [start], set()
    while stack:
        node = stack.pop()
        if node == goal:
            return True
        if node in seen:
            continue
        seen.add(node)
        stack.extend(adjacency.get(node, ()))
    return False


def _first_rule_position(model: NdfModel, target_qn: str) -> tuple[int, int]:
    simple = target_qn.rsplit(".", 1)[-1]
    for rule in model.mappings:
        if rule.target_type == simple or rule.target_type == target_qn or target_qn.endswith("." + rule.target_type):
            return rule.line, rule.column
    return 0, 0


def _check_full_coverage(
    model: NdfModel,
    local_types: dict[str, TypeDef],
    rules: list[ResolvedRule],
    virtual: set[str],
    diags: list[Diagnostic],
) -> None:
    covered: dict[str, set[str]] = {}
    for rule in rules:
        covered.setdefault(rule.target, set()).add(rule.target_field)
    for qn in sorted(virtual, key=lambda q: _declaration_index(model, q)):
        td = local_types.get(qn)
        if td is None:
            continue
        missing = [f.name for f in td.fields if f.name not in covered.get(qn, set())]
        if missing:
            diags.append(
                Diagnostic(
                    "error",
                    "CC7",
                    f"mapped type '{td.name}' leaves fields uncovered: "
                    + ", ".join(missing),
                    td.line,
                    td.column,
                )
            )


def _declaration_index(model: NdfModel, qn: str) -> int:
    for idx, td in enumerate(model.types):
        if td.qualified_name == qn:
            return idx
    return len(model.types)
