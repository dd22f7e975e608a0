"""Graph and measure documents, point syntax and result serialization.

Documents are YAML (JSON is accepted as well, being a subset).

Graph document::

    vertices: [0, 1, 2]          # optional; defaults to the edge endpoints
    edges:
      - {id: 0, u: 0, v: 1, length: 0.5}
      - {id: 1, u: 1, v: 2, length: 1.25}

Measure document::

    normalize: true              # optional; rescale to total mass 1
    atoms:
      - {edge: 0, offset: 0.25, mass: 1.0}
      - {vertex: 2, mass: 3.0}
    dirichlet:                   # optional
      - {vertex: 0}

Points on the command line are written ``edgeId:offset`` or ``v:vertexId``.
"""

from __future__ import annotations

import math
import re
from collections.abc import Mapping
from pathlib import Path

import numpy as np
import yaml

from .errors import ParseError
from .graph import GraphPoint, MetricGraphModel, build_model
from .spectral import DiscreteMeasure

_GRAPH_KEYS = {"vertices", "edges"}
_EDGE_KEYS = {"id", "u", "v", "length"}
_MEASURE_KEYS = {"atoms", "normalize", "dirichlet"}
_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def _load(path) -> object:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text)


def loads(text: str) -> object:
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed document: {exc}") from None


def _int(x, what: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ParseError(f"{what} must be an integer, got {x!r}")
    return x


def _real(x, what: str) -> float:
    if isinstance(x, bool):
        raise ParseError(f"{what} must be a number, got {x!r}")
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str) and _NUMBER.match(x.strip()):
        return float(x)
    raise ParseError(f"{what} must be a decimal number, got {x!r}")


def _mapping(x, allowed: set[str], what: str) -> Mapping:
    if not isinstance(x, Mapping):
        raise ParseError(f"{what} must be a mapping")
    extra = set(x) - allowed
    if extra:
        raise ParseError(f"{what}: unknown field(s) {sorted(extra)}")
    return x


def parse_graph(doc) -> MetricGraphModel:
    """Build a model from a parsed graph document."""
    doc = _mapping(doc, _GRAPH_KEYS, "graph document")
    if "edges" not in doc or not isinstance(doc["edges"], list):
        raise ParseError("graph document needs an 'edges' list")
    edges = []
    for i, rec in enumerate(doc["edges"]):
        rec = _mapping(rec, _EDGE_KEYS, f"edge #{i}")
        missing = _EDGE_KEYS - set(rec)
        if missing:
            raise ParseError(f"edge #{i}: missing field(s) {sorted(missing)}")
        edges.append(
            (_int(rec["id"], "edge id"), _int(rec["u"], "u"), _int(rec["v"], "v"), _real(rec["length"], "length"))
        )
    vertices = doc.get("vertices")
    if vertices is not None:
        if not isinstance(vertices, list):
            raise ParseError("'vertices' must be a list")
        vertices = [_int(v, "vertex id") for v in vertices]
    return build_model(edges, vertices)


def load_graph(path) -> MetricGraphModel:
    """Read a graph document from ``path``."""
    return parse_graph(_load(path))


def dump_graph(model: MetricGraphModel) -> str:
    doc = {
        "vertices": list(model.vertices),
        "edges": [{"id": e.id, "u": e.u, "v": e.v, "length": e.length} for e in model.edges],
    }
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def _point_record(rec, model: MetricGraphModel, what: str, extra: set[str] = frozenset()) -> GraphPoint:
    if not isinstance(rec, Mapping):
        raise ParseError(f"{what} must be a mapping")
    if "vertex" in rec:
        _mapping(rec, {"vertex", *extra}, what)
        return model.vertex_point(_int(rec["vertex"], "vertex"))
    _mapping(rec, {"edge", "offset", *extra}, what)
    if "edge" not in rec or "offset" not in rec:
        raise ParseError(f"{what} needs 'edge' and 'offset' (or 'vertex')")
    return model.point(_int(rec["edge"], "edge"), _real(rec["offset"], "offset"))


def parse_measure(doc, model: MetricGraphModel) -> tuple[DiscreteMeasure, list[GraphPoint] | None]:
    """Measure and optional Dirichlet set from a parsed measure document."""
    doc = _mapping(doc, _MEASURE_KEYS, "measure document")
    if not isinstance(doc.get("atoms"), list) or not doc["atoms"]:
        raise ParseError("measure document needs a nonempty 'atoms' list")
    atoms = []
    for i, rec in enumerate(doc["atoms"]):
        p = _point_record(rec, model, f"atom #{i}", {"mass"})
        if "mass" not in rec:
            raise ParseError(f"atom #{i}: missing 'mass'")
        atoms.append((p, _real(rec["mass"], "mass")))
    normalize = doc.get("normalize", False)
    if not isinstance(normalize, bool):
        raise ParseError("'normalize' must be true or false")
    dirichlet = None
    if "dirichlet" in doc:
        if not isinstance(doc["dirichlet"], list):
            raise ParseError("'dirichlet' must be a list")
        dirichlet = [_point_record(r, model, f"dirichlet #{i}") for i, r in enumerate(doc["dirichlet"])]
    return DiscreteMeasure.on(model, atoms, normalize=normalize), dirichlet


def load_measure(path, model: MetricGraphModel) -> tuple[DiscreteMeasure, list[GraphPoint] | None]:
    """Read a measure document from ``path``."""
    return parse_measure(_load(path), model)


def parse_point(text: str, model: MetricGraphModel) -> GraphPoint:
    """``edgeId:offset`` or ``v:vertexId``."""
    head, sep, tail = str(text).strip().partition(":")
    if not sep:
        raise ParseError(f"point {text!r}: expected 'edgeId:offset' or 'v:vertexId'")
    try:
        ident = int(tail) if head == "v" else int(head)
    except ValueError:
        raise ParseError(f"point {text!r}: bad id") from None
    if head == "v":
        return model.vertex_point(ident)
    return model.point(ident, _real(tail, "offset"))


def format_point(model: MetricGraphModel, p: GraphPoint) -> str:
    p = model.canonical(p)
    return str(p)


def point_record(p: GraphPoint) -> dict:
    if p.is_vertex:
        return {"vertex": p.vertex}
    return {"edge": p.edge, "offset": p.offset}


def jsonable(x):
    """Convert numpy scalars/arrays and non-finite floats for JSON output."""
    if isinstance(x, Mapping):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, GraphPoint):
        return point_record(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x
