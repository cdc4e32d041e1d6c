"""Shared fixtures for the mgfield test suite."""

import json

import pytest

from mgfield import config
from mgfield.graph import build_graph, generate_graph

_SETTINGS = [name for name in dir(config) if name.isupper()]


@pytest.fixture(autouse=True)
def restore_config():
    """Config is module-global; undo whatever a test loads."""
    saved = {name: getattr(config, name) for name in _SETTINGS}
    yield
    for name, value in saved.items():
        setattr(config, name, value)


@pytest.fixture
def tadpole():
    """Two unit 4-cycles sharing vertex 3."""
    return generate_graph("tadpole")


@pytest.fixture
def path3():
    """0 --1.0-- 1 --0.5-- 2"""
    return build_graph(3, [(0, 0, 1, 1.0), (1, 1, 2, 0.5)])


@pytest.fixture
def cycle4():
    return generate_graph("cycle", {"n": 4})


@pytest.fixture
def tree8():
    return generate_graph("tree", {"n": 8, "seed": 3})


@pytest.fixture
def write_json(tmp_path):
    def write(name, data):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)

    return write


@pytest.fixture
def write_text(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write
