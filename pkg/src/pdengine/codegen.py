"""Schema-driven generation of the particle store.

``generate_sources`` expands the bundled templates into Python modules plus a
manifest. The same text is either written to disk (``generate_all``, the CLI
``generate`` step) or compiled in-process (``store_class_for``); both paths
build the store class through :func:`build_store_class`.
"""

from __future__ import annotations

import functools
import os
import tempfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .schema import ParticleSchema, SyncContext, parse_schema
from .storage import StoreBase
from .template import Template

__all__ = [
    "GeneratedArtifact",
    "generate_sources",
    "generate_all",
    "emit_manifest",
    "build_store_class",
    "store_class_for",
    "load_generated",
    "MODULES",
]

MODULES = ("storage.py", "accessors.py", "packing.py")
MANIFEST = "manifest.txt"


@dataclass(frozen=True)
class GeneratedArtifact:
    relative_path: str
    contents: str


@functools.lru_cache(maxsize=None)
def _template(name: str) -> Template:
    body = resources.files("pdengine").joinpath("templates", name).read_text(encoding="utf-8")
    return Template(body, name=name)


def _tidy(text: str) -> str:
    lines = [line.rstrip() for line in text.splitlines()]
    while lines and not lines[-1]:
        lines.pop()
    return "\n".join(lines) + "\n"


def emit_manifest(schema: ParticleSchema) -> str:
    """Properties (name, datatype, bytes, mode) then one line per sync context."""
    text = _template("manifest.txt.tmpl").render(schema)
    for ctx in SyncContext:
        text += _template("manifest_context.txt.tmpl").render(schema, ctx)
    return _tidy(text)


def generate_sources(schema: ParticleSchema) -> dict[str, str]:
    sources = {
        "storage.py": _template("storage.py.tmpl").render(schema),
        "accessors.py": _template("accessors.py.tmpl").render(schema),
    }
    packing = _template("packing.py.tmpl").render(schema)
    for ctx in SyncContext:
        packing += _template("packing_context.py.tmpl").render(schema, ctx)
    sources["packing.py"] = packing
    sources = {k: _tidy(v) for k, v in sources.items()}
    sources[MANIFEST] = emit_manifest(schema)
    return sources


def _write_atomic(path: Path, contents: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(contents)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def generate_all(schema: ParticleSchema, out_dir) -> list[GeneratedArtifact]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = [GeneratedArtifact(name, text) for name, text in generate_sources(schema).items()]
    for art in artifacts:
        _write_atomic(out / art.relative_path, art.contents)
    return artifacts


def _exec_module(name: str, source: str, origin: str) -> dict:
    namespace = {"__name__": f"pdengine._generated.{name[:-3]}", "__file__": origin}
    exec(compile(source, origin, "exec"), namespace)
    return namespace


def build_store_class(sources: dict[str, str], origin: str = "<generated>") -> type[StoreBase]:
    """Compose the generated mixins into a concrete ``ParticleStore`` class."""
    mods = {name: _exec_module(name, sources[name], f"{origin}/{name}") for name in MODULES}
    schema = parse_schema(mods["storage.py"]["SCHEMA_TEXT"], require_core=False)
    cls = type(
        "ParticleStore",
        (mods["accessors.py"]["Accessors"], mods["packing.py"]["Packing"],
         mods["storage.py"]["Storage"]),
        {
            "schema": schema,
            "PACK_ORDER": mods["packing.py"]["PACK_ORDER"],
            "__module__": "pdengine._generated",
        },
    )
    return cls


@functools.lru_cache(maxsize=32)
def store_class_for(schema: ParticleSchema) -> type[StoreBase]:
    return build_store_class(generate_sources(schema))


def load_generated(out_dir) -> type[StoreBase]:
    """Build the store class from files previously written by ``generate_all``."""
    out = Path(out_dir)
    sources = {name: (out / name).read_text(encoding="utf-8") for name in MODULES}
    return build_store_class(sources, origin=str(out))


def builtin_generated_dir() -> Path:
    """Committed output for the bundled DEM schema."""
    return Path(str(resources.files("pdengine").joinpath("generated")))


def builtin_schema_text() -> str:
    return resources.files("pdengine").joinpath("schemas", "dem.schema").read_text(
        encoding="utf-8"
    )
