"""Canonical pretty-printer for NDF models.

The output is deterministic: two-space indentation, one declaration per
line, types before mappings, a single blank line between top-level
blocks. Re-parsing the output yields a model equal to the input.
"""

from __future__ import annotations

from .ast import KIND_KEYWORDS, MappingRule, NdfModel, TypeDef


def pretty_print(model: NdfModel) -> str:
    blocks: list[str] = []
    if model.package:
        blocks.append(f"package {model.package};")
    for td in model.types:
        blocks.append("\n".join(_type_lines(td, 0)))
    if model.mappings:
        blocks.append("\n".join(_mapping_line(m) for m in model.mappings))
    if not blocks:
        return ""
    return "\n\n".join(blocks) + "\n"


def _type_lines(td: TypeDef, depth: int) -> list[str]:
    pad = "  " * depth
    lines = [f"{pad}{td.name} {{"]
    for f in td.fields:
        lines.append(f"{pad}  {KIND_KEYWORDS[f.kind]} {f.name};")
    for inner in td.nested:
        lines.extend(_type_lines(inner, depth + 1))
    lines.append(f"{pad}}}")
    return lines


def _mapping_line(rule: MappingRule) -> str:
    rhs = " | ".join(f"{s.type_name}.{s.field_name}" for s in rule.sources)
    return f"{rule.target_type}.{rule.target_field} := {rhs};"
