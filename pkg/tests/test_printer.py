"""Canonical printer: deterministic layout, parse round-trip."""

import random

from nimkit.ndf.parser import parse
from nimkit.ndf.printer import pretty_print

from tests.conftest import ROOM_MODEL, STANDARD_ROOM_MODEL
from tests.generators import messy_render, random_model


def test_layout_of_simple_type():
    model = parse("Room{String roomName;}").model
    assert pretty_print(model) == "Room {\n  String roomName;\n}\n"


def test_package_and_mapping_layout():
    text = "package a.b; T{String x;} T.x := p.S.y|q.R.z;"
    model = parse(text).model
    assert pretty_print(model) == (
        "package a.b;\n\nT {\n  String x;\n}\n\nT.x := p.S.y | q.R.z;\n"
    )


def test_nested_indentation():
    model = parse("A { String x; B { Number y; } }").model
    assert pretty_print(model) == (
        "A {\n  String x;\n  B {\n    Number y;\n  }\n}\n"
    )


def test_empty_model_prints_empty():
    assert pretty_print(parse("").model) == ""
    assert pretty_print(parse("package p;").model) == "package p;\n"


def test_print_is_stable():
    model = parse(STANDARD_ROOM_MODEL).model
    assert pretty_print(model) == pretty_print(parse(pretty_print(model)).model)


def test_round_trip_on_samples():
    for src in (ROOM_MODEL, STANDARD_ROOM_MODEL):
        model = parse(src).model
        assert parse(pretty_print(model)).model == model


def test_round_trip_on_generated_models():
    rng = random.Random(0x5EED2)
    for _ in range(150):
        model = random_model(rng)
        parsed = parse(messy_render(rng, model)).model
        again = parse(pretty_print(parsed)).model
        assert again == parsed
