from __future__ import annotations

import pytest

from pdengine.schema import ParticleSchema, SyncContext, example_schema
from pdengine.template import Template, TemplateError, expand_template

PACK = """\
{% for prop in properties %}
{% if prop.mode in GHOST_CREATE %}
pack {{prop.name}}
{% endif %}
{% endfor %}
"""


def test_pack_loop_with_context_condition():
    assert expand_template(PACK, example_schema()) == "pack Position\npack Radius\n"


def test_empty_schema_loop_is_empty():
    assert expand_template(PACK, ParticleSchema((), require_core=False)) == ""


def test_plain_loop():
    out = expand_template("{% for prop in properties %}\n{{prop.name}}:{{prop.type}}\n"
                          "{% endfor %}\n", example_schema())
    assert out.splitlines() == ["Position:vec3", "Radius:real64", "Force:vec3"]


def test_else_branch_and_negation():
    tmpl = ("{% for prop in properties %}"
            "{% if not prop.mode == NEVER %}{{prop.name}}{% else %}-{% endif %};"
            "{% endfor %}")
    assert expand_template(tmpl, example_schema()) == "Position;Radius;-;"


def test_mode_list_and_type_conditions():
    tmpl = ("{% for prop in properties %}"
            "{% if prop.mode in (COPY, NEVER) %}{{prop.index}}{% endif %}"
            "{% if prop.type != vec3 %}r{% endif %}"
            "{% endfor %}")
    assert expand_template(tmpl, example_schema()) == "1r2"


def test_bound_context():
    tmpl = ("{{ctx.ident}}:{% for prop in properties %}"
            "{% if prop.mode in ctx %} {{prop.ident}}{% endif %}{% endfor %}")
    assert expand_template(tmpl, example_schema(), SyncContext.GHOST_UPDATE) == \
        "ghost_update: position"
    with pytest.raises(TemplateError, match="context"):
        expand_template(tmpl, example_schema())


def test_schema_count_and_widths():
    tmpl = "{{schema.count}}{% for prop in properties %} {{prop.width}}{% endfor %}"
    assert expand_template(tmpl, example_schema()) == "3 24 8 24"


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("{% for prop in properties %}x", "unclosed for"),
        ("{% if prop.mode in COPY %}x{% endfor %}", "line 1"),
        ("x{% endif %}", "endif"),
        ("{{prop.colour}}", "unknown placeholder"),
        ("{{ nonsense }}", "unknown placeholder"),
        ("{% for prop in properties %}{% if prop.mode in SOMETIMES %}{% endif %}{% endfor %}",
         "operand"),
        ("{% for prop in properties %}{% if prop.name == x %}{% endif %}{% endfor %}",
         "unknown condition"),
        ("{% while true %}", "unknown block"),
        ("{% for prop in properties %}{% for prop in properties %}{% endfor %}{% endfor %}",
         "nested"),
    ],
)
def test_malformed_templates_fail_at_parse(body, fragment):
    with pytest.raises(TemplateError, match=fragment):
        Template(body)


def test_error_line_numbers():
    body = "a\nb\n{% for prop in properties %}\n{{prop.nope}}\n{% endfor %}\n"
    with pytest.raises(TemplateError, match="line 4"):
        Template(body)


def test_placeholder_outside_loop():
    with pytest.raises(TemplateError, match="outside a loop"):
        expand_template("{{prop.name}}", example_schema())


def test_standalone_tags_leave_no_blank_lines():
    out = expand_template("begin\n{% for prop in properties %}\n  {{prop.name}}\n"
                          "{% endfor %}\nend\n", example_schema())
    assert out == "begin\n  Position\n  Radius\n  Force\nend\n"
