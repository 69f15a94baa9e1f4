from __future__ import annotations

import ast

import pytest

from pdengine.codegen import (
    MODULES,
    builtin_generated_dir,
    builtin_schema_text,
    emit_manifest,
    generate_all,
    generate_sources,
    store_class_for,
)
from pdengine.schema import SchemaError, example_schema, parse_schema

from conftest import MINIMAL_SCHEMA


def _context_lines(manifest: str) -> dict[str, tuple[list[str], list[str]]]:
    out = {}
    for line in manifest.splitlines():
        if " pack: " in line:
            ctx, rest = line.split(" pack: ")
            pack, unpack = rest.split(" | unpack: ")
            out[ctx] = (pack.split(), unpack.split())
    return out


def test_example_manifest():
    manifest = emit_manifest(example_schema())
    lines = manifest.splitlines()
    assert "Position vec3 24 ALWAYS" in lines
    assert "Radius real64 8 COPY" in lines
    assert "Force vec3 24 NEVER" in lines
    ctx = _context_lines(manifest)
    assert ctx["GHOST_CREATE"][0] == ["Position", "Radius"]
    assert ctx["GHOST_UPDATE"][0] == ["Position"]
    assert ctx["MIGRATION_TRANSFER"][0] == ["Position", "Radius"]


def test_migration_property_listed_under_transfer_only():
    s = parse_schema(MINIMAL_SCHEMA + "property oldForce : vec3 = 0,0,0 sync MIGRATION\n")
    ctx = _context_lines(emit_manifest(s))
    assert "oldForce" in ctx["MIGRATION_TRANSFER"][0]
    assert "oldForce" not in ctx["GHOST_CREATE"][0] + ctx["GHOST_UPDATE"][0]


def test_minimal_manifest_lists_required_properties():
    lines = emit_manifest(parse_schema(MINIMAL_SCHEMA)).splitlines()
    assert "position vec3 24 ALWAYS" in lines
    assert "interactionRadius real64 8 COPY" in lines


def test_unpack_order_equals_pack_order():
    manifest = emit_manifest(parse_schema(builtin_schema_text()))
    for pack, unpack in _context_lines(manifest).values():
        assert pack == unpack


def test_generated_pack_order_matches_manifest(example_store_cls):
    assert example_store_cls.PACK_ORDER == {
        "GHOST_CREATE": ("Position", "Radius"),
        "GHOST_UPDATE": ("Position",),
        "MIGRATION_TRANSFER": ("Position", "Radius"),
    }


def test_minimal_store_has_two_columns():
    src = generate_sources(parse_schema(MINIMAL_SCHEMA))["storage.py"]
    tree = ast.parse(src)
    allocate = next(n for n in ast.walk(tree)
                    if isinstance(n, ast.FunctionDef) and n.name == "_allocate")
    targets = [t.attr for n in ast.walk(allocate) if isinstance(n, ast.Assign)
               for t in n.targets]
    assert targets == ["_arr_position", "_arr_interaction_radius"]


def test_generate_all_is_deterministic(tmp_path):
    a = generate_all(example_schema(), tmp_path / "a")
    b = generate_all(example_schema(), tmp_path / "b")
    assert [x.relative_path for x in a] == [*MODULES, "manifest.txt"]
    for art in a:
        assert (tmp_path / "a" / art.relative_path).read_bytes() == \
            (tmp_path / "b" / art.relative_path).read_bytes()
    assert a == b
    # no temp files left behind by the atomic writes
    assert sorted(p.name for p in (tmp_path / "a").iterdir()) == sorted(x.relative_path for x in a)


def test_generated_code_is_valid_python():
    for name, src in generate_sources(parse_schema(builtin_schema_text())).items():
        if name.endswith(".py"):
            ast.parse(src)


def _defined_names(sources: dict[str, str]) -> set[str]:
    names = set()
    for name in MODULES:
        for node in ast.walk(ast.parse(sources[name])):
            if isinstance(node, ast.FunctionDef):
                names.add(node.name)
            elif isinstance(node, ast.Assign):
                names.update(t.id for t in node.targets if isinstance(t, ast.Name))
    return names


def test_adding_a_property_keeps_existing_identifiers():
    base = parse_schema(MINIMAL_SCHEMA)
    extended = parse_schema(MINIMAL_SCHEMA + "property temperature : real64 = 300 sync COPY\n")
    before = _defined_names(generate_sources(base))
    after = _defined_names(generate_sources(extended))
    assert before <= after
    assert {"get_temperature", "set_temperature"} <= after


def test_committed_generated_code_is_current():
    fresh = generate_sources(parse_schema(builtin_schema_text()))
    committed = builtin_generated_dir()
    for name, text in fresh.items():
        assert (committed / name).read_text(encoding="utf-8") == text, name


def test_invalid_schema_has_no_outputs(tmp_path):
    with pytest.raises(SchemaError):
        generate_all(parse_schema("property x : real64 = 0 sync NEVER\n"), tmp_path)
    assert not tmp_path.joinpath("manifest.txt").exists()


def test_all_datatypes_round_trip_through_store():
    s = parse_schema(MINIMAL_SCHEMA + "property count : int64 = -3 sync COPY\n"
                     "property tag : uint64 = 18446744073709551615 sync ALWAYS\n")
    cls = store_class_for(s)
    store = cls(rank=0)
    i = store.create_particle(5)
    assert store.get_count(i) == -3
    assert store.get_tag(i) == 2**64 - 1
    store.set_count(i, -(2**63))
    assert store.get_count(i) == -(2**63)
