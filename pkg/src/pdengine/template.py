"""A small template expander: placeholders, one loop kind, and conditionals.

Supported constructs::

    {{prop.name}}  {{prop.type}}  {{prop.default}}      placeholders
    {% for prop in properties %} ... {% endfor %}       iterate the schema
    {% if prop.mode in GHOST_CREATE %} ... {% else %} ... {% endif %}

A line holding nothing but a block tag is dropped from the output entirely,
so templates can be indented naturally. Anything outside this set is an
error; nothing unknown is ever copied through silently.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Union

from .schema import DataType, ParticleSchema, PropertySpec, SyncContext, SyncMode

__all__ = ["Template", "TemplateError", "expand_template"]


class TemplateError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"template line {line}: {message}")


_TAG_RE = re.compile(r"({{.*?}}|{%.*?%})", re.DOTALL)
_STANDALONE_RE = re.compile(r"^[ \t]*({%[^\n]*?%})[ \t]*(?:\n|\Z)", re.MULTILINE)

_PROP_FIELDS: dict[str, Callable[[PropertySpec, int], str]] = {
    "name": lambda p, i: p.name,
    "type": lambda p, i: p.dtype.value,
    "default": lambda p, i: p.default_literal,
    "ident": lambda p, i: p.ident,
    "mode": lambda p, i: p.mode.value,
    "width": lambda p, i: str(p.width),
    "fmt": lambda p, i: p.dtype.struct_format,
    "dtype": lambda p, i: p.dtype.numpy_dtype,
    "index": lambda p, i: str(i),
}

_CTX_FIELDS: dict[str, Callable[[SyncContext], str]] = {
    "name": lambda c: c.value,
    "ident": lambda c: c.value.lower(),
}

_KNOWN_PLACEHOLDERS = (
    {f"prop.{k}" for k in _PROP_FIELDS} | {f"ctx.{k}" for k in _CTX_FIELDS} | {"schema.count"}
)


@dataclass
class _Text:
    text: str


@dataclass
class _Placeholder:
    expr: str
    line: int


@dataclass
class _For:
    line: int
    body: list = field(default_factory=list)


@dataclass
class _If:
    cond: "_Cond"
    line: int
    body: list = field(default_factory=list)
    orelse: list = field(default_factory=list)


Node = Union[_Text, _Placeholder, _For, _If]


@dataclass(frozen=True)
class _Cond:
    subject: str  # "prop.mode" | "prop.type" | "ctx"
    op: str  # "in" | "==" | "!="
    operand: tuple
    negate: bool
    line: int

    @property
    def needs_prop(self) -> bool:
        return self.subject.startswith("prop.")


_MODE_NAMES = {m.name for m in SyncMode}
_CTX_NAMES = {c.name for c in SyncContext}
_TYPE_NAMES = {t.value for t in DataType}


def _parse_cond(text: str, line: int) -> _Cond:
    words = text.split(None, 1)
    negate = False
    if words and words[0] == "not":
        negate = True
        text = words[1] if len(words) > 1 else ""
    m = re.fullmatch(r"\s*(prop\.mode|prop\.type|ctx)\s*(==|!=|\bin\b)\s*(.+?)\s*", text)
    if m is None:
        raise TemplateError(f"unknown condition {text!r}", line)
    subject, op, rhs = m.groups()
    if subject == "prop.mode" and op == "in":
        if rhs == "ctx":
            operand = ("ctx",)
        elif rhs in _CTX_NAMES:
            operand = tuple(sorted(m.name for m in SyncContext[rhs].modes))
        elif rhs.startswith("(") and rhs.endswith(")"):
            operand = tuple(x.strip() for x in rhs[1:-1].split(",") if x.strip())
            bad = [x for x in operand if x not in _MODE_NAMES]
            if bad or not operand:
                raise TemplateError(f"unknown sync mode in {rhs!r}", line)
        else:
            raise TemplateError(f"unknown condition operand {rhs!r}", line)
    elif op in ("==", "!=") and subject in ("prop.mode", "prop.type", "ctx"):
        valid = {"prop.mode": _MODE_NAMES, "prop.type": _TYPE_NAMES, "ctx": _CTX_NAMES}[subject]
        if rhs not in valid:
            raise TemplateError(f"unknown condition operand {rhs!r}", line)
        operand = (rhs,)
    else:
        raise TemplateError(f"unknown condition {text!r}", line)
    return _Cond(subject, op, operand, negate, line)


class Template:
    """Parsed template; parse errors surface at construction."""

    def __init__(self, body: str, name: str = "<template>"):
        self.body = body
        self.name = name
        self._nodes = self._parse(body)

    def _parse(self, body: str) -> list:
        # fold a standalone tag's newline into the tag so line numbers stay right
        text = _STANDALONE_RE.sub(
            lambda m: m.group(1)[:-2] + ("\n%}" if m.group(0).endswith("\n") else "%}"), body
        )
        root: list = []
        stack: list[tuple[Node | None, list]] = [(None, root)]
        pos_line = 1
        for piece in _TAG_RE.split(text):
            if not piece:
                continue
            line = pos_line
            pos_line += piece.count("\n")
            out = stack[-1][1]
            if piece.startswith("{{"):
                expr = piece[2:-2].strip()
                if expr not in _KNOWN_PLACEHOLDERS:
                    raise TemplateError(f"unknown placeholder {{{{{expr}}}}}", line)
                out.append(_Placeholder(expr, line))
                continue
            if not piece.startswith("{%"):
                out.append(_Text(piece))
                continue
            tag = piece[2:-2].strip()
            head = tag.split(None, 1)[0] if tag else ""
            if head == "for":
                if re.fullmatch(r"for\s+prop\s+in\s+properties", tag) is None:
                    raise TemplateError(f"unsupported loop {tag!r}", line)
                if any(isinstance(n, _For) for n, _ in stack):
                    raise TemplateError("nested loops are not supported", line)
                node = _For(line)
                out.append(node)
                stack.append((node, node.body))
            elif head == "endfor":
                if not isinstance(stack[-1][0], _For):
                    raise TemplateError("endfor without matching for", line)
                stack.pop()
            elif head == "if":
                node = _If(_parse_cond(tag[2:].strip(), line), line)
                out.append(node)
                stack.append((node, node.body))
            elif head == "else":
                node = stack[-1][0]
                if not isinstance(node, _If) or stack[-1][1] is node.orelse:
                    raise TemplateError("else without matching if", line)
                stack[-1] = (node, node.orelse)
            elif head == "endif":
                if not isinstance(stack[-1][0], _If):
                    raise TemplateError("endif without matching if", line)
                stack.pop()
            else:
                raise TemplateError(f"unknown block {tag!r}", line)
        if len(stack) > 1:
            node = stack[-1][0]
            kind = "for" if isinstance(node, _For) else "if"
            raise TemplateError(f"unclosed {kind} block", node.line)
        return root

    def render(self, schema: ParticleSchema, ctx: SyncContext | None = None) -> str:
        out: list[str] = []
        self._emit(self._nodes, schema, ctx, None, out)
        return "".join(out)

    def _emit(self, nodes, schema, ctx, prop, out) -> None:
        for node in nodes:
            if isinstance(node, _Text):
                out.append(node.text)
            elif isinstance(node, _Placeholder):
                out.append(self._lookup(node, schema, ctx, prop))
            elif isinstance(node, _For):
                for i, p in enumerate(schema.properties):
                    self._emit(node.body, schema, ctx, (p, i), out)
            else:
                branch = node.body if self._test(node.cond, ctx, prop) else node.orelse
                self._emit(branch, schema, ctx, prop, out)

    @staticmethod
    def _lookup(node: _Placeholder, schema, ctx, prop) -> str:
        root, _, attr = node.expr.partition(".")
        if root == "prop" and attr in _PROP_FIELDS:
            if prop is None:
                raise TemplateError(f"{{{{{node.expr}}}}} used outside a loop", node.line)
            return _PROP_FIELDS[attr](*prop)
        if root == "ctx" and attr in _CTX_FIELDS:
            if ctx is None:
                raise TemplateError(f"{{{{{node.expr}}}}} needs a sync context", node.line)
            return _CTX_FIELDS[attr](ctx)
        if node.expr == "schema.count":
            return str(len(schema))
        raise TemplateError(f"unknown placeholder {{{{{node.expr}}}}}", node.line)

    @staticmethod
    def _test(cond: _Cond, ctx, prop) -> bool:
        if cond.needs_prop and prop is None:
            raise TemplateError("property condition used outside a loop", cond.line)
        if cond.operand == ("ctx",) or cond.subject == "ctx":
            if ctx is None:
                raise TemplateError("condition needs a sync context", cond.line)
        if cond.subject == "ctx":
            value = ctx.name
        elif cond.subject == "prop.mode":
            value = prop[0].mode.name
        else:
            value = prop[0].dtype.value
        if cond.op == "in":
            members = {m.name for m in ctx.modes} if cond.operand == ("ctx",) else set(cond.operand)
            result = value in members
        elif cond.op == "==":
            result = value == cond.operand[0]
        else:
            result = value != cond.operand[0]
        return result != cond.negate


def expand_template(tmpl: Template | str, schema: ParticleSchema,
                    ctx: SyncContext | None = None) -> str:
    """Expand ``tmpl`` for ``schema``; ``ctx`` binds ``{{ctx.*}}`` and ``in ctx``."""
    if isinstance(tmpl, str):
        tmpl = Template(tmpl)
    return tmpl.render(schema, ctx)
