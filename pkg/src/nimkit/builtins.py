"""The builtin neighbourhood model library and its one structural rule.

The library ships as NDF files in ``models/builtin`` under the package
``cooperate.nim``: a composite ``Neighbourhood`` root plus standalone
element types (geo information, traffic, persons, reports, parking,
the energy-element family and grid connections). The structural rule —
a grid connection links exactly two distinct, existing energy
elements — cannot be expressed in the language, so it is enforced here
at ingestion time.
"""

from __future__ import annotations

from importlib import resources
from typing import Mapping

from .registry import RegistrationResult
from .transform import ConcreteInstance
from .ndf.ast import TypeDef

BUILTIN_PACKAGE = "cooperate.nim"

#: registration order of the shipped files
BUILTIN_FILES = (
    "geoinfo.ndf",
    "traffic.ndf",
    "persons.ndf",
    "reports.ndf",
    "parking.ndf",
    "energy_elements.ndf",
    "grid.ndf",
    "neighbourhood.ndf",
)

ENERGY_ELEMENT_TYPES = frozenset(
    {"PublicLighting", "Building", "TechnicalSystem", "ElectricVehicle"}
)
GRID_CONNECTION_TYPE = "EnergyGridConnection"
GRID_REFERENCE_FIELD = "elements"


def builtin_sources() -> list[tuple[str, str]]:
    """(file name, NDF text) pairs in registration order."""
    root = resources.files("nimkit").joinpath("models/builtin")
    return [
        (name, root.joinpath(name).read_text(encoding="utf-8"))
        for name in BUILTIN_FILES
    ]


def load_builtins(target) -> list[RegistrationResult]:
    """Register the builtin set on anything exposing ``register_model``.

    Safe to call twice: the second run is rejected wholesale as duplicate
    type names and changes nothing.
    """
    return [target.register_model(text) for _, text in builtin_sources()]


def _simple_name(qualified_name: str) -> str:
    return qualified_name.rsplit(".", 1)[-1]


def _in_builtin_package(qualified_name: str) -> bool:
    return qualified_name.startswith(BUILTIN_PACKAGE + ".")


def is_grid_connection(qualified_name: str) -> bool:
    return (
        _in_builtin_package(qualified_name)
        and _simple_name(qualified_name) == GRID_CONNECTION_TYPE
    )


def is_energy_element(qualified_name: str) -> bool:
    return (
        _in_builtin_package(qualified_name)
        and _simple_name(qualified_name) in ENERGY_ELEMENT_TYPES
    )


def validate_grid_connection(
    instance: ConcreteInstance, store, known: Mapping[str, str] | None = None
) -> list[str]:
    """Check the two-distinct-energy-elements rule for one connection.

    ``known`` maps instance ids declared elsewhere in the same document
    to their types, so a connection may reference siblings that are
    being ingested together with it. Returns human-readable violations;
    empty means the connection is well-formed.
    """
    known = known or {}
    raw = instance.fields.get(GRID_REFERENCE_FIELD, "")
    refs = raw.split() if isinstance(raw, str) else []
    violations: list[str] = []
    if len(refs) != 2:
        violations.append(
            f"a grid connection must reference exactly two energy elements, "
            f"found {len(refs)}"
        )
    if len(refs) == 2 and refs[0] == refs[1]:
        violations.append(
            f"a grid connection must link two distinct elements, "
            f"'{refs[0]}' appears twice"
        )
    for ref in dict.fromkeys(refs):
        if ref in known:
            ref_type = known[ref]
        elif store is not None and store.has_instance(ref):
            ref_type = store.instance_type(ref)
        else:
            violations.append(f"referenced instance '{ref}' does not exist")
            continue
        if not is_energy_element(ref_type):
            violations.append(
                f"referenced instance '{ref}' is not an energy element "
                f"(type {ref_type})"
            )
    return violations


def collect_declared_ids(type_def: TypeDef, instance: ConcreteInstance) -> dict[str, str]:
    """Client-assigned instance ids in a document tree, mapped to types."""
    ids: dict[str, str] = {}
    if instance.instance_id:
        ids[instance.instance_id] = type_def.qualified_name
    for nt in type_def.nested:
        for sub in instance.fields.get(nt.name, ()):
            ids.update(collect_declared_ids(nt, sub))
    return ids


def check_instance_tree(
    type_def: TypeDef, instance: ConcreteInstance, store
) -> list[str]:
    """Apply the grid rule to every connection in a document tree."""
    known = collect_declared_ids(type_def, instance)
    return _check_tree(type_def, instance, store, known)


def _check_tree(
    type_def: TypeDef,
    instance: ConcreteInstance,
    store,
    known: Mapping[str, str],
) -> list[str]:
    violations: list[str] = []
    if is_grid_connection(type_def.qualified_name):
        violations.extend(validate_grid_connection(instance, store, known))
    for nt in type_def.nested:
        for sub in instance.fields.get(nt.name, ()):
            violations.extend(_check_tree(nt, sub, store, known))
    return violations
