import math

import pytest

from mgopt.errors import ParseError, PointOffModel, ValidationError
from mgopt.generators import complete
from mgopt.graph import GraphPoint
from mgopt.io import dump_graph, jsonable, load_graph, load_measure, loads, parse_graph, parse_measure, parse_point

GRAPH = """
vertices: [0, 1, 2]
edges:
  - {id: 0, u: 0, v: 1, length: 0.5}
  - {id: 1, u: 1, v: 2, length: "1.25"}
"""


def test_parse_graph():
    g = parse_graph(loads(GRAPH))
    assert g.n_edges == 2 and g.edge_by_id[1].length == 1.25


def test_roundtrip():
    g = complete(4)
    assert parse_graph(loads(dump_graph(g))) == g


def test_json_is_accepted():
    g = parse_graph(loads('{"edges": [{"id": 0, "u": 0, "v": 1, "length": 1}]}'))
    assert g.n_vertices == 2


@pytest.mark.parametrize(
    "text",
    [
        "edges: [",
        "[1, 2]",
        "vertices: [0]",
        "edges:\n  - {id: 0, u: 0, v: 1}",
        "edges:\n  - {id: 0, u: 0, v: 1, length: 1, colour: red}",
        "edges:\n  - {id: 0.5, u: 0, v: 1, length: 1}",
        "edges:\n  - {id: 0, u: 0, v: 1, length: one}",
        "edges:\n  - {id: 0, u: 0, v: 1, length: true}",
        "edges: []\nextra: 1",
    ],
)
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_graph(loads(text))


def test_invalid_graph_is_validation_error():
    with pytest.raises(ValidationError) as info:
        parse_graph(loads("edges:\n  - {id: 0, u: 0, v: 1, length: -1}"))
    assert not isinstance(info.value, ParseError)


def test_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_graph(tmp_path / "none.yaml")


def test_measure(tmp_path):
    g = parse_graph(loads(GRAPH))
    doc = """
normalize: true
atoms:
  - {edge: 0, offset: 0.25, mass: 1}
  - {vertex: 2, mass: 3}
dirichlet:
  - {vertex: 0}
"""
    path = tmp_path / "m.yaml"
    path.write_text(doc)
    mu, dirichlet = load_measure(path, g)
    assert mu.masses == (0.25, 0.75)
    assert dirichlet == [GraphPoint.at_vertex(0)]


@pytest.mark.parametrize(
    "doc",
    [
        "atoms: []",
        "atoms:\n  - {edge: 0, offset: 0.1}",
        "atoms:\n  - {edge: 0, mass: 1}",
        "atoms:\n  - {edge: 0, offset: 0.1, mass: 1, color: 1}",
        "atoms:\n  - {edge: 0, offset: 0.1, mass: 1}\nnormalize: yes please",
    ],
)
def test_measure_errors(doc):
    g = parse_graph(loads(GRAPH))
    with pytest.raises(ParseError):
        parse_measure(loads(doc), g)


def test_parse_point():
    g = parse_graph(loads(GRAPH))
    assert parse_point("v:2", g) == GraphPoint.at_vertex(2)
    assert parse_point("1:0.25", g) == GraphPoint.on_edge(1, 0.25)
    assert parse_point("0:0.5", g) == GraphPoint.at_vertex(1)
    for bad in ("x", "a:1", "v:x", "0:abc"):
        with pytest.raises(ParseError):
            parse_point(bad, g)
    with pytest.raises(PointOffModel):
        parse_point("0:9", g)


def test_jsonable():
    import numpy as np

    out = jsonable({"a": np.float64(1.5), "b": [math.inf, np.int64(2)], "p": GraphPoint.on_edge(1, 0.5)})
    assert out == {"a": 1.5, "b": ["inf", 2], "p": {"edge": 1, "offset": 0.5}}
