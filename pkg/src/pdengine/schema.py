"""Particle property schema: declaration, validation and the sync-context filter.

A schema file is line oriented::

    # comment
    property position : vec3 = (0,0,0) sync ALWAYS
    property interactionRadius : real64 = 0 sync COPY

Every generated artifact is derived from the parsed :class:`ParticleSchema`.
"""

from __future__ import annotations

import enum
import math
import re
import struct
from dataclasses import dataclass, field
from typing import Iterable, Union

__all__ = [
    "SyncMode",
    "SyncContext",
    "DataType",
    "PropertySpec",
    "ParticleSchema",
    "SchemaBuilder",
    "SchemaError",
    "parse_schema",
    "format_schema",
    "properties_for_context",
    "accessor_name",
    "REQUIRED_PROPERTIES",
]


class SchemaError(ValueError):
    """Raised for malformed or inconsistent schema declarations."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SyncMode(enum.Enum):
    NEVER = "NEVER"
    COPY = "COPY"
    MIGRATION = "MIGRATION"
    ALWAYS = "ALWAYS"

    @classmethod
    def parse(cls, text: str) -> "SyncMode":
        try:
            return cls[text.strip()]
        except KeyError:
            raise SchemaError(f"unknown sync mode {text.strip()!r}") from None

    def __str__(self) -> str:
        return self.value


class SyncContext(enum.Enum):
    """The three situations in which particle state is packed for another rank."""

    GHOST_CREATE = "GHOST_CREATE"
    GHOST_UPDATE = "GHOST_UPDATE"
    MIGRATION_TRANSFER = "MIGRATION_TRANSFER"

    @property
    def modes(self) -> frozenset[SyncMode]:
        return _CONTEXT_MODES[self]

    def __str__(self) -> str:
        return self.value


_CONTEXT_MODES = {
    SyncContext.GHOST_CREATE: frozenset({SyncMode.COPY, SyncMode.ALWAYS}),
    SyncContext.GHOST_UPDATE: frozenset({SyncMode.ALWAYS}),
    SyncContext.MIGRATION_TRANSFER: frozenset(
        {SyncMode.COPY, SyncMode.MIGRATION, SyncMode.ALWAYS}
    ),
}


class DataType(enum.Enum):
    REAL64 = "real64"
    VEC3 = "vec3"
    INT64 = "int64"
    UINT64 = "uint64"

    @property
    def struct_format(self) -> str:
        return {"real64": "d", "vec3": "3d", "int64": "q", "uint64": "Q"}[self.value]

    @property
    def width(self) -> int:
        """Size in bytes on the wire."""
        return struct.calcsize("<" + self.struct_format)

    @property
    def numpy_dtype(self) -> str:
        return {"real64": "float64", "vec3": "float64", "int64": "int64", "uint64": "uint64"}[
            self.value
        ]

    @classmethod
    def parse(cls, text: str) -> "DataType":
        key = text.strip()
        key = _TYPE_ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise SchemaError(f"unknown datatype {text.strip()!r}") from None

    def __str__(self) -> str:
        return self.value


# spellings used by C++-flavoured declarations
_TYPE_ALIASES = {"double": "real64", "Vec3": "vec3", "int64_t": "int64", "uint64_t": "uint64"}

Value = Union[float, int, tuple]

_INT64 = (-(2**63), 2**63 - 1)
_UINT64 = (0, 2**64 - 1)
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

# snake-case names owned by per-particle metadata in the store
_RESERVED = frozenset(
    {"uid", "owner", "owner_rank", "ghost", "is_ghost", "ghost_holders", "size", "rank"}
)

REQUIRED_PROPERTIES = (
    ("position", DataType.VEC3, SyncMode.ALWAYS),
    ("interactionRadius", DataType.REAL64, SyncMode.COPY),
)


def accessor_name(name: str) -> str:
    """Snake-case identifier used for the generated ``get_``/``set_`` pair."""
    s = re.sub(r"([a-z0-9])([A-Z])", r"\1_\2", name)
    s = re.sub(r"([A-Z]+)([A-Z][a-z])", r"\1_\2", s)
    return s.lower()


def _parse_scalar(text: str, dtype: DataType) -> float | int:
    text = text.strip()
    if dtype in (DataType.REAL64, DataType.VEC3):
        try:
            value = float(text)
        except ValueError:
            raise SchemaError(f"{text!r} is not a real64 literal") from None
        if not math.isfinite(value):
            raise SchemaError(f"{text!r} is not a finite real64 literal")
        return value
    try:
        value = int(text, 10)
    except ValueError:
        raise SchemaError(f"{text!r} is not an {dtype} literal") from None
    lo, hi = _INT64 if dtype is DataType.INT64 else _UINT64
    if not lo <= value <= hi:
        raise SchemaError(f"{value} out of range for {dtype}")
    return value


def parse_default(text: str, dtype: DataType) -> Value:
    """Parse a default literal. Vectors accept ``(a,b,c)`` or bare ``a,b,c``."""
    text = text.strip()
    if dtype is DataType.VEC3:
        body = text
        if body.startswith("(") and body.endswith(")"):
            body = body[1:-1]
        parts = body.split(",")
        if len(parts) != 3:
            raise SchemaError(f"{text!r} is not a vec3 literal")
        return tuple(_parse_scalar(p, dtype) for p in parts)
    return _parse_scalar(text, dtype)


def format_default(value: Value, dtype: DataType) -> str:
    if dtype is DataType.VEC3:
        return "(" + ",".join(repr(float(v)) for v in value) + ")"
    if dtype is DataType.REAL64:
        return repr(float(value))
    return str(int(value))


@dataclass(frozen=True)
class PropertySpec:
    name: str
    dtype: DataType
    default: Value
    mode: SyncMode

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise SchemaError(f"invalid property name {self.name!r}")
        if accessor_name(self.name) in _RESERVED:
            raise SchemaError(f"property name {self.name!r} is reserved")

    @property
    def ident(self) -> str:
        return accessor_name(self.name)

    @property
    def width(self) -> int:
        return self.dtype.width

    @property
    def default_literal(self) -> str:
        return format_default(self.default, self.dtype)


@dataclass(frozen=True)
class ParticleSchema:
    """Ordered, immutable collection of property declarations.

    ``require_core`` enforces the ``position``/``interactionRadius`` pair the
    runtime depends on; codegen on its own accepts any well-formed schema.
    """

    properties: tuple[PropertySpec, ...] = ()
    require_core: bool = field(default=True, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "properties", tuple(self.properties))
        seen: dict[str, str] = {}
        for p in self.properties:
            if p.name in seen.values():
                raise SchemaError(f"duplicate property name {p.name!r}")
            if p.ident in seen:
                raise SchemaError(
                    f"property {p.name!r} collides with {seen[p.ident]!r} "
                    f"(both map to accessor {p.ident!r})"
                )
            seen[p.ident] = p.name
        if self.require_core:
            for name, dtype, mode in REQUIRED_PROPERTIES:
                p = self.get(name)
                if p is None:
                    raise SchemaError(f"required property {name} absent")
                if p.dtype is not dtype or p.mode is not mode:
                    raise SchemaError(
                        f"required property {name} must be {dtype} with sync {mode}"
                    )

    def __iter__(self):
        return iter(self.properties)

    def __len__(self) -> int:
        return len(self.properties)

    def get(self, name: str) -> PropertySpec | None:
        for p in self.properties:
            if p.name == name:
                return p
        return None

    def __contains__(self, name: str) -> bool:
        return self.get(name) is not None

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.properties]

    def for_context(self, ctx: SyncContext) -> list[PropertySpec]:
        return properties_for_context(self, ctx)


def properties_for_context(schema: ParticleSchema, ctx: SyncContext) -> list[PropertySpec]:
    """Properties transmitted in ``ctx``, in declaration order."""
    modes = ctx.modes
    return [p for p in schema.properties if p.mode in modes]


class SchemaBuilder:
    """Incremental construction mirroring ``addProperty(name, type, default, mode)``.

    >>> b = SchemaBuilder(require_core=False)
    >>> b.add_property("Radius", "double", "0", "COPY").build().names
    ['Radius']
    """

    def __init__(self, require_core: bool = True):
        self._props: list[PropertySpec] = []
        self.require_core = require_core

    def add_property(self, name: str, datatype: str | DataType, default: str | Value,
                     mode: str | SyncMode) -> "SchemaBuilder":
        dtype = datatype if isinstance(datatype, DataType) else DataType.parse(datatype)
        if isinstance(default, str):
            default = parse_default(default, dtype)
        mode = mode if isinstance(mode, SyncMode) else SyncMode.parse(mode)
        self._props.append(PropertySpec(name, dtype, default, mode))
        return self

    def build(self) -> ParticleSchema:
        return ParticleSchema(tuple(self._props), require_core=self.require_core)


_LINE_RE = re.compile(
    r"^property\s+(?P<name>\S+)\s*:\s*(?P<type>\S+)\s*=\s*(?P<default>.+?)\s+sync\s+(?P<mode>\S+)$"
)


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def parse_schema(text: str, require_core: bool = True) -> ParticleSchema:
    props: list[PropertySpec] = []
    names: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        m = _LINE_RE.match(line)
        if m is None:
            raise SchemaError(f"syntax error: {raw.strip()!r}", lineno)
        try:
            dtype = DataType.parse(m["type"])
            default = parse_default(m["default"], dtype)
            mode = SyncMode.parse(m["mode"])
            prop = PropertySpec(m["name"], dtype, default, mode)
        except SchemaError as exc:
            raise SchemaError(str(exc), lineno) from None
        if prop.name in names:
            raise SchemaError(f"duplicate property name {prop.name!r}", lineno)
        names.add(prop.name)
        props.append(prop)
    return ParticleSchema(tuple(props), require_core=require_core)


def format_schema(schema: ParticleSchema | Iterable[PropertySpec]) -> str:
    lines = [
        f"property {p.name} : {p.dtype} = {p.default_literal} sync {p.mode}"
        for p in schema
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def load_schema(path, require_core: bool = True) -> ParticleSchema:
    with open(path, encoding="utf-8") as fh:
        return parse_schema(fh.read(), require_core=require_core)


def example_schema() -> ParticleSchema:
    """Position/Radius/Force: the smallest schema that exercises three sync modes."""
    return (
        SchemaBuilder(require_core=False)
        .add_property("Position", "Vec3", "0,0,0", "ALWAYS")
        .add_property("Radius", "double", "0", "COPY")
        .add_property("Force", "Vec3", "0,0,0", "NEVER")
        .build()
    )
