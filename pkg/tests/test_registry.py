"""Runtime registry: atomic registration, descriptors, type lookup."""

import pytest

from nimkit.errors import UnknownTypeError
from nimkit.registry import ModelRegistry

from tests.conftest import (
    ALT_ROOM_MODEL,
    ROOM_MODEL,
    STANDARD_ROOM_MODEL,
    register_sample_rooms,
)
from tests.generators import BASE_TIME


def test_acceptance_returns_a_model_id(registry):
    result = registry.register_model(ROOM_MODEL)
    assert result.ok and result.status == "accepted"
    assert result.model_id and len(result.model_id) == 12
    assert result.diagnostics == []


def test_registration_is_atomic_on_rejection(registry):
    bad = "Broken { String x; String x; }\nAlso { String y; }\n"
    result = registry.register_model(bad)
    assert not result.ok and result.model_id is None
    assert result.status == "rejected"
    # nothing from the rejected model leaked in — both names stay free
    assert registry.register_model("Also { String y; }").ok
    assert registry.register_model("Broken { String x; }").ok


def test_syntax_errors_reject_without_state(registry):
    result = registry.register_model("Room {")
    assert not result.ok
    assert result.diagnostics[0].code == "syntax"
    assert registry.list_models() == []


def test_bytes_sources_are_accepted(registry):
    assert registry.register_model(ROOM_MODEL.encode()).ok
    assert not registry.register_model(b"\xff\xfeRoom{}").ok


def test_duplicate_registration_is_rejected(registry):
    assert registry.register_model(ROOM_MODEL).ok
    again = registry.register_model(ROOM_MODEL)
    assert not again.ok
    assert again.diagnostics[0].code == "CC1"
    assert len(registry.list_models()) == 1


def test_descriptor_announces_types_and_endpoints(registry):
    register_sample_rooms(registry)
    rooms, alt, std = registry.list_models()
    assert rooms.types == ("Room",)
    assert rooms.virtual_types == ()
    assert rooms.endpoints == (
        ("POST", "/v1/types/Room/instances"),
        ("GET", "/v1/types/Room/instances"),
    )
    assert std.types == ("StandardRoom",)
    assert std.virtual_types == ("StandardRoom",)
    # virtual types are read-only over HTTP
    assert std.endpoints == (("GET", "/v1/types/StandardRoom/instances"),)
    assert std.plans[0].source_types() == ("Room", "AnotherRoom")
    assert std.registered_at == BASE_TIME


def test_descriptor_covers_nested_types(registry):
    registry.register_model("package p; Outer { String a; Inner { Number n; } }")
    (desc,) = registry.list_models()
    assert desc.types == ("p.Outer", "p.Outer.Inner")
    assert ("POST", "/v1/types/p.Outer.Inner/instances") in desc.endpoints
    assert desc.package == "p"
    d = desc.to_dict()
    assert d["modelId"] == desc.model_id
    assert d["types"] == ["p.Outer", "p.Outer.Inner"]


def test_model_source_is_canonical(registry):
    result = registry.register_model("Room{String roomName;}")
    assert registry.model_source(result.model_id) == "Room {\n  String roomName;\n}\n"
    with pytest.raises(UnknownTypeError):
        registry.model_source("nope")
    assert registry.has_model(result.model_id)
    assert not registry.has_model("nope")


def test_resolve_type_supports_suffixes(registry):
    registry.register_model("package cooperate.nim; Traffic { Number level; }")
    assert registry.resolve_type("Traffic").qualified_name == "cooperate.nim.Traffic"
    assert (
        registry.resolve_type("nim.Traffic").qualified_name == "cooperate.nim.Traffic"
    )
    with pytest.raises(UnknownTypeError) as err:
        registry.resolve_type("Ghost")
    assert "no registered type" in str(err.value)


def test_resolve_type_reports_ambiguity(registry):
    registry.register_model("package a; Room { String x; }")
    registry.register_model("package b; Room { String y; }")
    with pytest.raises(UnknownTypeError) as err:
        registry.resolve_type("Room")
    assert "ambiguous" in str(err.value)
    assert registry.resolve_type("a.Room").qualified_name == "a.Room"


def test_virtual_flag_and_plans(registry):
    register_sample_rooms(registry)
    assert registry.is_virtual("StandardRoom")
    assert not registry.is_virtual("Room")
    plan = registry.plan_for("StandardRoom")
    assert plan.field_maps() == {
        "Room": {"identifier": "roomName"},
        "AnotherRoom": {"identifier": "roomID"},
    }
    with pytest.raises(UnknownTypeError):
        registry.plan_for("Room")


def test_plans_for_chains_compile_incrementally(registry):
    registry.register_model("A { String ax; }")
    registry.register_model("B { String bx; }\nB.bx := A.ax;\n")
    registry.register_model("C { String cx; }\nC.cx := B.bx;\n")
    assert registry.plan_for("C").field_maps() == {"A": {"cx": "ax"}}


def test_partial_sources_surface_as_warnings(registry):
    registry.register_model("Full { String a; String b; }")
    registry.register_model("Half { String c; }")
    result = registry.register_model(
        "T { String x; String y; }\nT.x := Full.a | Half.c;\nT.y := Full.b;\n"
    )
    assert result.ok
    warnings = [d for d in result.diagnostics if d.severity == "warning"]
    assert len(warnings) == 1 and warnings[0].code == "plan"
    assert registry.plan_for("T").source_types() == ("Full",)


def test_listeners_fire_once_per_accepted_model(registry):
    seen = []
    registry.on_registered(lambda mid, src, when: seen.append((mid, src, when)))
    ok = registry.register_model(ROOM_MODEL)
    registry.register_model("Room { String dup; }")  # rejected, no event
    assert [s[0] for s in seen] == [ok.model_id]
    assert seen[0][1] == ROOM_MODEL
    assert seen[0][2] == BASE_TIME


def test_explicit_id_and_time_are_honored(registry):
    result = registry.register_model(
        ROOM_MODEL, model_id="fixed-id", registered_at=BASE_TIME
    )
    assert result.model_id == "fixed-id"
    assert registry.list_models()[0].registered_at == BASE_TIME


def test_registered_types_lists_everything(registry):
    register_sample_rooms(registry)
    assert set(registry.registered_types()) == {
        "Room",
        "AnotherRoom",
        "StandardRoom",
    }
    assert registry.type_def("Room").name == "Room"
    with pytest.raises(UnknownTypeError):
        registry.type_def("Ghost")
