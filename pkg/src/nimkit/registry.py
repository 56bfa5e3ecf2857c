"""Runtime model registry: validate, publish, describe.

Registration is all-or-nothing: a model that fails any semantic check
leaves the registry untouched and reports its diagnostics. An accepted
model immediately contributes its types to name resolution, its mapping
rules to the plan set, and an adapter descriptor announcing the HTTP
endpoints the service will answer for it — no code generation, no
restart.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from datetime import datetime
from typing import Callable

from .errors import UnknownTypeError
from .ndf.ast import Diagnostic, NdfModel, TypeDef
from .ndf.checker import analyze
from .ndf.parser import parse, parse_bytes
from .ndf.printer import pretty_print
from .ndf.symbols import SymbolTable, TypeInfo, match_candidates
from .transform import MappingPlan, build_plans
from .util import new_id, utc_now


@dataclass(frozen=True)
class AdapterDescriptor:
    """What one registered model exposes at runtime."""

    model_id: str
    package: str
    types: tuple[str, ...]
    virtual_types: tuple[str, ...]
    plans: tuple[MappingPlan, ...]
    endpoints: tuple[tuple[str, str], ...]  # (HTTP method, path)
    registered_at: datetime

    def to_dict(self) -> dict:
        return {
            "modelId": self.model_id,
            "package": self.package,
            "types": list(self.types),
            "virtualTypes": list(self.virtual_types),
            "endpoints": [[m, p] for m, p in self.endpoints],
            "registeredAt": self.registered_at.isoformat(),
        }


@dataclass(frozen=True)
class RegistrationResult:
    status: str  # accepted | rejected
    model_id: str | None
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return self.status == "accepted"


def _endpoints_for(qualified_name: str, virtual: bool) -> tuple[tuple[str, str], ...]:
    base = f"/v1/types/{qualified_name}/instances"
    if virtual:
        return (("GET", base),)
    return (("POST", base), ("GET", base))


class ModelRegistry:
    """Thread-safe collection of registered models and compiled plans."""

    def __init__(self, clock: Callable[[], datetime] = utc_now):
        self._clock = clock
        self._lock = threading.Lock()
        self.symbols = SymbolTable()
        self._descriptors: list[AdapterDescriptor] = []
        self._sources: dict[str, tuple[NdfModel, str]] = {}
        self._plans: dict[str, MappingPlan] = {}
        self._listeners: list[Callable[[str, str, datetime], None]] = []

    # -- registration -----------------------------------------------------

    def register_model(
        self,
        source: str | bytes,
        *,
        model_id: str | None = None,
        registered_at: datetime | None = None,
    ) -> RegistrationResult:
        result = parse_bytes(source) if isinstance(source, bytes) else parse(source)
        if result.model is None:
            return RegistrationResult("rejected", None, result.diagnostics)
        model = result.model
        with self._lock:
            analysis = analyze(model, self.symbols)
            if not analysis.ok:
                return RegistrationResult("rejected", None, analysis.diagnostics)
            mid = model_id or new_id()[:12]
            when = registered_at if registered_at is not None else self._clock()
            model = replace(model, model_id=mid)
            self.symbols.add_model(model, analysis.resolved_rules, analysis.virtual_types)
            plans, plan_diags = build_plans(
                analysis.virtual_types, self.symbols, self._plans
            )
            self._plans.update(plans)
            virtual = set(analysis.virtual_types)
            endpoints: list[tuple[str, str]] = []
            for td in model.all_types():
                endpoints.extend(_endpoints_for(td.qualified_name, td.qualified_name in virtual))
            descriptor = AdapterDescriptor(
                model_id=mid,
                package=model.package,
                types=tuple(td.qualified_name for td in model.all_types()),
                virtual_types=analysis.virtual_types,
                plans=tuple(plans[qn] for qn in analysis.virtual_types),
                endpoints=tuple(endpoints),
                registered_at=when,
            )
            self._descriptors.append(descriptor)
            self._sources[mid] = (model, model.source_text)
            listeners = list(self._listeners)
        for listener in listeners:
            listener(mid, model.source_text, when)
        return RegistrationResult(
            "accepted", mid, analysis.diagnostics + plan_diags
        )

    def on_registered(self, listener: Callable[[str, str, datetime], None]) -> None:
        """Subscribe to accepted registrations (model id, source, time)."""
        self._listeners.append(listener)

    # -- lookups -------------------------------------------------------------

    def list_models(self) -> list[AdapterDescriptor]:
        with self._lock:
            return list(self._descriptors)

    def model_source(self, model_id: str) -> str:
        """The canonical (pretty-printed) text of a registered model."""
        with self._lock:
            entry = self._sources.get(model_id)
        if entry is None:
            raise UnknownTypeError(f"no model '{model_id}'")
        return pretty_print(entry[0])

    def has_model(self, model_id: str) -> bool:
        with self._lock:
            return model_id in self._sources

    def resolve_type(self, name: str) -> TypeInfo:
        """Resolve a possibly-shortened type name against the registry.

        Exact qualified matches win; otherwise the name must match
        exactly one registered type at a dot boundary.
        """
        hits = match_candidates(name, self.symbols.qualified_names())
        if len(hits) == 1:
            return self.symbols.lookup(hits[0])
        if not hits:
            raise UnknownTypeError(f"no registered type matches '{name}'")
        raise UnknownTypeError(
            f"type name '{name}' is ambiguous: " + ", ".join(sorted(hits))
        )

    def type_def(self, qualified_name: str) -> TypeDef:
        info = self.symbols.lookup(qualified_name)
        if info is None:
            raise UnknownTypeError(f"no registered type '{qualified_name}'")
        return info.type_def

    def is_virtual(self, qualified_name: str) -> bool:
        return self.symbols.is_virtual(qualified_name)

    def plan_for(self, qualified_name: str) -> MappingPlan:
        plan = self._plans.get(qualified_name)
        if plan is None:
            raise UnknownTypeError(f"no mapping plan for '{qualified_name}'")
        return plan

    def registered_types(self) -> list[str]:
        return list(self.symbols.qualified_names())
