from __future__ import annotations

import pytest

from pdengine.codegen import builtin_generated_dir, load_generated, store_class_for
from pdengine.schema import example_schema, parse_schema

MINIMAL_SCHEMA = """\
property position : vec3 = (0,0,0) sync ALWAYS
property interactionRadius : real64 = 0 sync COPY
"""


@pytest.fixture(scope="session")
def example_store_cls():
    """Store for the three-property Position/Radius/Force schema."""
    return store_class_for(example_schema())


@pytest.fixture(scope="session")
def dem_store_cls():
    return load_generated(builtin_generated_dir())


@pytest.fixture(scope="session")
def minimal_store_cls():
    return store_class_for(parse_schema(MINIMAL_SCHEMA))
