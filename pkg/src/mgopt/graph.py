"""Metric graph models, points, subdivision and the path metric.

A model is a finite connected multigraph whose edges carry positive
lengths.  Every edge ``(u, v)`` is identified with the interval
``[0, length]``; offset 0 sits at ``u``.  Loops are split at their
midpoint on construction, so a normalized model never contains
self-edges.  Ids are opaque integers; subdivision retires the split edge
ids and records where their points went in a :class:`PointMap`.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import csgraph

from .errors import (
    DanglingEndpoint,
    DisconnectedGraph,
    DuplicateId,
    NonpositiveLength,
    PointOffModel,
    ValidationError,
)

# offsets within SNAP_TOL * length of an endpoint are treated as the endpoint
SNAP_TOL = 1e-12
# relative tolerance for treating two candidate maxima as tied
TIE_TOL = 1e-11


@dataclass(frozen=True)
class Edge:
    id: int
    u: int
    v: int
    length: float


@dataclass(frozen=True)
class GraphPoint:
    """A point of the metric graph.

    Exactly one representation is used: ``vertex`` is set for vertices,
    otherwise ``edge`` and ``offset`` locate an interior point measured
    from the edge's ``u`` endpoint.  Use :meth:`MetricGraphModel.point` to
    obtain the canonical form of a raw ``(edge, offset)`` pair.
    """

    edge: int | None = None
    offset: float = 0.0
    vertex: int | None = None

    @classmethod
    def on_edge(cls, edge: int, offset: float) -> "GraphPoint":
        return cls(edge=int(edge), offset=float(offset))

    @classmethod
    def at_vertex(cls, vertex: int) -> "GraphPoint":
        return cls(vertex=int(vertex))

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None

    def __str__(self) -> str:
        if self.is_vertex:
            return f"v:{self.vertex}"
        return f"{self.edge}:{self.offset!r}"


@dataclass(frozen=True)
class PointMap:
    """Where the points of retired edges live after subdivision.

    ``pieces[e]`` lists ``(start, end, new_edge)`` triples covering the old
    edge ``e`` in order; the point at offset ``t`` of ``e`` with
    ``start <= t <= end`` becomes offset ``t - start`` on ``new_edge``.
    Points on edges that are not keys, and vertex points, map to
    themselves.
    """

    pieces: Mapping[int, tuple[tuple[float, float, int], ...]] = field(default_factory=dict)

    def map_raw(self, edge: int, offset: float) -> tuple[int, float]:
        plist = self.pieces.get(edge)
        if plist is None:
            return edge, offset
        for start, end, new in plist:
            if offset <= end:
                break
        return new, min(max(offset - start, 0.0), end - start)

    def __call__(self, point: GraphPoint) -> GraphPoint:
        if point.is_vertex:
            return point
        e, t = self.map_raw(point.edge, point.offset)
        return GraphPoint.on_edge(e, t)

    def compose(self, other: "PointMap") -> "PointMap":
        """Map equivalent to applying ``self`` first and ``other`` second."""
        out: dict[int, tuple[tuple[float, float, int], ...]] = {}
        for old, plist in self.pieces.items():
            expanded = []
            for start, end, new in plist:
                sub = other.pieces.get(new)
                if sub is None:
                    expanded.append((start, end, new))
                else:
                    expanded.extend((start + a, start + b, n2) for a, b, n2 in sub)
            out[old] = tuple(expanded)
        for old, plist in other.pieces.items():
            out.setdefault(old, plist)
        return PointMap(out)

    def scaled(self, c: float) -> "PointMap":
        return PointMap(
            {k: tuple((a * c, b * c, n) for a, b, n in v) for k, v in self.pieces.items()}
        )

    @property
    def is_identity(self) -> bool:
        return not self.pieces


@dataclass(frozen=True)
class MetricGraphModel:
    """Immutable, validated, loop-free model of a metric graph."""

    vertices: tuple[int, ...]
    edges: tuple[Edge, ...]
    history: PointMap = field(default_factory=PointMap, compare=False)

    # ----- indices -------------------------------------------------------
    @cached_property
    def vertex_index(self) -> dict[int, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def edge_by_id(self) -> dict[int, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def incident(self) -> dict[int, list[Edge]]:
        inc: dict[int, list[Edge]] = {v: [] for v in self.vertices}
        for e in self.edges:
            inc[e.u].append(e)
            inc[e.v].append(e)
        return inc

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self.edges], dtype=float)

    @cached_property
    def endpoint_index(self) -> tuple[np.ndarray, np.ndarray]:
        vi = self.vertex_index
        return (
            np.array([vi[e.u] for e in self.edges], dtype=int),
            np.array([vi[e.v] for e in self.edges], dtype=int),
        )

    @cached_property
    def vertex_distances(self) -> np.ndarray:
        """All-pairs shortest path lengths between vertices."""
        n = len(self.vertices)
        w = np.full((n, n), np.inf)
        iu, iv = self.endpoint_index
        for a, b, ell in zip(iu, iv, self.lengths):
            if ell < w[a, b]:
                w[a, b] = w[b, a] = ell
        g = csgraph.csgraph_from_dense(w, null_value=np.inf)
        return csgraph.dijkstra(g, directed=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def next_vertex_id(self) -> int:
        return max(self.vertices) + 1

    def next_edge_id(self) -> int:
        used = [e.id for e in self.edges]
        used.extend(self.history.pieces.keys())
        return max(used) + 1

    # ----- points --------------------------------------------------------
    def point(self, edge: int, offset: float) -> GraphPoint:
        """Canonical point at ``offset`` along ``edge``.

        Retired edge ids are resolved through the subdivision history.
        Offsets within a relative ``SNAP_TOL`` of an endpoint snap to it.
        """
        edge = int(edge)
        offset = float(offset)
        if edge not in self.edge_by_id:
            if edge not in self.history.pieces:
                raise PointOffModel(f"unknown edge id {edge}")
            plist = self.history.pieces[edge]
            total = plist[-1][1]
            self._check_offset(offset, total, edge)
            edge, offset = self.history.map_raw(edge, offset)
        e = self.edge_by_id[edge]
        self._check_offset(offset, e.length, edge)
        tol = SNAP_TOL * e.length
        if offset <= tol:
            return GraphPoint.at_vertex(e.u)
        if offset >= e.length - tol:
            return GraphPoint.at_vertex(e.v)
        return GraphPoint.on_edge(edge, offset)

    @staticmethod
    def _check_offset(offset: float, length: float, edge: int) -> None:
        tol = SNAP_TOL * length
        if not (math.isfinite(offset) and -tol <= offset <= length + tol):
            raise PointOffModel(f"offset {offset} outside [0, {length}] on edge {edge}")

    def canonical(self, p: GraphPoint) -> GraphPoint:
        """Validate ``p`` against this model and return its canonical form."""
        if p.is_vertex:
            if p.vertex not in self.vertex_index:
                raise PointOffModel(f"unknown vertex id {p.vertex}")
            return p
        if p.edge is None:
            raise PointOffModel("point has neither an edge nor a vertex")
        return self.point(p.edge, p.offset)

    def vertex_point(self, v: int) -> GraphPoint:
        if v not in self.vertex_index:
            raise PointOffModel(f"unknown vertex id {v}")
        return GraphPoint.at_vertex(v)

    def anchors(self, p: GraphPoint) -> list[tuple[int, float]]:
        """(vertex index, distance) pairs through which ``p`` reaches the skeleton."""
        p = self.canonical(p)
        vi = self.vertex_index
        if p.is_vertex:
            return [(vi[p.vertex], 0.0)]
        e = self.edge_by_id[p.edge]
        return [(vi[e.u], p.offset), (vi[e.v], e.length - p.offset)]

    def point_key(self, p: GraphPoint) -> tuple[int, float]:
        """Lexicographic key (edge id, offset); vertices use their smallest incident edge."""
        p = self.canonical(p)
        if not p.is_vertex:
            return (p.edge, p.offset)
        best = None
        for e in self.incident[p.vertex]:
            for t in ((0.0,) if e.u == p.vertex else ()) + ((e.length,) if e.v == p.vertex else ()):
                key = (e.id, t)
                if best is None or key < best:
                    best = key
        return best

    def position(self, p: GraphPoint) -> tuple[int, float]:
        """Some (edge id, offset) pair describing ``p`` (vertices via :meth:`point_key`)."""
        return self.point_key(p)


# ---------------------------------------------------------------------------
# construction


def _coerce_edge(item) -> tuple[int, int, int, float]:
    if isinstance(item, Edge):
        return item.id, item.u, item.v, item.length
    if isinstance(item, Mapping):
        try:
            return item["id"], item["u"], item["v"], item["length"]
        except KeyError as exc:
            raise ValidationError(f"edge record missing field {exc}") from None
    try:
        eid, u, v, length = item
    except (TypeError, ValueError):
        raise ValidationError(f"cannot interpret edge {item!r}") from None
    return eid, u, v, length


def _as_id(x, what: str) -> int:
    if isinstance(x, bool) or not isinstance(x, (int, np.integer)):
        raise ValidationError(f"{what} ids must be integers, got {x!r}")
    return int(x)


def build_model(edges, vertices: Iterable[int] | None = None) -> MetricGraphModel:
    """Validate a vertex/edge description and return a normalized model.

    Parameters
    ----------
    edges
        Iterable of :class:`Edge`, ``(id, u, v, length)`` tuples or mappings
        with those keys.  A mapping with keys ``vertices`` and ``edges`` is
        also accepted in place of both arguments.
    vertices
        Vertex ids.  Defaults to the endpoints of ``edges``.

    Raises
    ------
    NonpositiveLength, DanglingEndpoint, DisconnectedGraph, DuplicateId
    """
    if isinstance(edges, Mapping):
        vertices = edges.get("vertices", vertices)
        edges = edges.get("edges", [])
    raw = [_coerce_edge(it) for it in edges]
    if not raw:
        raise ValidationError("a metric graph needs at least one edge")

    recs = []
    for eid, u, v, length in raw:
        eid = _as_id(eid, "edge")
        u, v = _as_id(u, "vertex"), _as_id(v, "vertex")
        try:
            length = float(length)
        except (TypeError, ValueError):
            raise ValidationError(f"edge {eid}: length {length!r} is not a number") from None
        if not (math.isfinite(length) and length > 0):
            raise NonpositiveLength(f"edge {eid}: length must be finite and > 0, got {length}")
        recs.append((eid, u, v, length))

    ids = [r[0] for r in recs]
    if len(set(ids)) != len(ids):
        raise DuplicateId("edge ids must be unique")

    if vertices is None:
        vlist = sorted({r[1] for r in recs} | {r[2] for r in recs})
    else:
        vlist = [_as_id(v, "vertex") for v in vertices]
        if len(set(vlist)) != len(vlist):
            raise DuplicateId("vertex ids must be unique")
        vset = set(vlist)
        for eid, u, v, _ in recs:
            if u not in vset or v not in vset:
                raise DanglingEndpoint(f"edge {eid} has an endpoint outside the vertex list")

    # split loops at their midpoint
    next_v = max(vlist) + 1
    next_e = max(ids) + 1
    pieces: dict[int, tuple[tuple[float, float, int], ...]] = {}
    out: list[Edge] = []
    for eid, u, v, length in recs:
        if u != v:
            out.append(Edge(eid, u, v, length))
            continue
        w = next_v
        next_v += 1
        vlist.append(w)
        h = 0.5 * length
        e1, e2 = next_e, next_e + 1
        next_e += 2
        out.append(Edge(e1, u, w, h))
        out.append(Edge(e2, w, v, length - h))
        pieces[eid] = ((0.0, h, e1), (h, length, e2))

    model = MetricGraphModel(tuple(vlist), tuple(out), PointMap(pieces))
    _check_connected(model)
    return model


def _check_connected(model: MetricGraphModel) -> None:
    n = model.n_vertices
    if n == 1:
        return
    iu, iv = model.endpoint_index
    adj = np.zeros((n, n), dtype=bool)
    adj[iu, iv] = True
    adj[iv, iu] = True
    ncomp, _ = csgraph.connected_components(adj, directed=False)
    if ncomp != 1:
        raise DisconnectedGraph(f"graph has {ncomp} connected components")


def scale(model: MetricGraphModel, c: float) -> MetricGraphModel:
    """Multiply every edge length by ``c > 0``."""
    if not (c > 0 and math.isfinite(c)):
        raise NonpositiveLength("scale factor must be finite and > 0")
    edges = tuple(Edge(e.id, e.u, e.v, e.length * c) for e in model.edges)
    return MetricGraphModel(model.vertices, edges, model.history.scaled(c))


# ---------------------------------------------------------------------------
# subdivision


def subdivide_at(
    model: MetricGraphModel, points: Iterable[GraphPoint]
) -> tuple[MetricGraphModel, PointMap]:
    """Insert vertices at ``points``.

    Returns the refined model and the map from points of ``model`` to
    points of the refined model.  Points already at vertices are ignored;
    if nothing is split the input model is returned with an identity map.
    """
    cuts: dict[int, list[float]] = {}
    for p in points:
        p = model.canonical(p)
        if not p.is_vertex:
            cuts.setdefault(p.edge, []).append(p.offset)
    if not cuts:
        return model, PointMap()

    next_v = model.next_vertex_id()
    next_e = model.next_edge_id()
    verts = list(model.vertices)
    new_edges: list[Edge] = []
    pieces: dict[int, tuple[tuple[float, float, int], ...]] = {}
    for e in model.edges:
        offs = cuts.get(e.id)
        if not offs:
            new_edges.append(e)
            continue
        offs = sorted(set(offs))
        # drop cuts closer together than the snap tolerance
        merged = [offs[0]]
        for t in offs[1:]:
            if t - merged[-1] > SNAP_TOL * e.length:
                merged.append(t)
        bounds = [0.0, *merged, e.length]
        nodes = [e.u]
        for _ in merged:
            nodes.append(next_v)
            verts.append(next_v)
            next_v += 1
        nodes.append(e.v)
        plist = []
        for i in range(len(bounds) - 1):
            a, b = bounds[i], bounds[i + 1]
            new_edges.append(Edge(next_e, nodes[i], nodes[i + 1], b - a))
            plist.append((a, b, next_e))
            next_e += 1
        pieces[e.id] = tuple(plist)

    pm = PointMap(pieces)
    refined = MetricGraphModel(tuple(verts), tuple(new_edges), model.history.compose(pm))
    return refined, pm


# ---------------------------------------------------------------------------
# metric


def total_length(model: MetricGraphModel) -> float:
    return math.fsum(e.length for e in model.edges)


def degree(model: MetricGraphModel, x: GraphPoint) -> int:
    x = model.canonical(x)
    if not x.is_vertex:
        return 2
    return len(model.incident[x.vertex])


def path_distance(model: MetricGraphModel, x: GraphPoint, y: GraphPoint) -> float:
    """Arc length of a shortest path between ``x`` and ``y``."""
    x = model.canonical(x)
    y = model.canonical(y)
    if x == y:
        return 0.0
    D = model.vertex_distances
    best = math.inf
    for a, da in model.anchors(x):
        for b, db in model.anchors(y):
            best = min(best, D[a, b] + da + db)
    if not x.is_vertex and not y.is_vertex and x.edge == y.edge:
        best = min(best, abs(x.offset - y.offset))
    return float(best)


def _affine_routes(model: MetricGraphModel, e1: Edge, e2: Edge) -> np.ndarray:
    """Rows (c, a, b) with route length c + a*t + b*s between x_t on e1 and y_s on e2."""
    vi = model.vertex_index
    D = model.vertex_distances
    rows = []
    for p, ap, cp in ((vi[e1.u], 1.0, 0.0), (vi[e1.v], -1.0, e1.length)):
        for q, bq, cq in ((vi[e2.u], 1.0, 0.0), (vi[e2.v], -1.0, e2.length)):
            rows.append((D[p, q] + cp + cq, ap, bq))
    if e1.id == e2.id:
        rows.append((0.0, -1.0, 1.0))  # s - t on the triangle t <= s
    return np.array(rows)


def _polygon(e1: Edge, e2: Edge) -> list[tuple[float, float, float]]:
    """Half-planes g*t + h*s <= k describing the (t, s) domain."""
    if e1.id == e2.id:
        ell = e1.length
        return [(-1.0, 0.0, 0.0), (0.0, 1.0, ell), (1.0, -1.0, 0.0)]
    return [(-1.0, 0.0, 0.0), (1.0, 0.0, e1.length), (0.0, -1.0, 0.0), (0.0, 1.0, e2.length)]


def _candidates_for_pair(model, e1, e2):
    """Affine route rows and the arrangement vertices inside the (t, s) domain.

    The maximum of a concave piecewise-affine function over a polygon is
    attained at a vertex of the arrangement formed by the polygon sides
    and the tie lines of its affine pieces, so enumerating those vertices
    is exact.
    """
    rows = _affine_routes(model, e1, e2)
    halfplanes = _polygon(e1, e2)
    slack = 1e-12 * max(e1.length, e2.length)
    lines = list(halfplanes)
    for i, j in itertools.combinations(range(len(rows)), 2):
        ci, ai, bi = rows[i]
        cj, aj, bj = rows[j]
        if ai != aj or bi != bj:
            lines.append((ai - aj, bi - bj, cj - ci))
    pts = []
    for (g1, h1, k1), (g2, h2, k2) in itertools.combinations(lines, 2):
        det = g1 * h2 - h1 * g2
        if abs(det) < 1e-14:
            continue
        t = (k1 * h2 - h1 * k2) / det
        s = (g1 * k2 - k1 * g2) / det
        if all(g * t + h * s <= k + slack for g, h, k in halfplanes):
            pts.append((min(max(t, 0.0), e1.length), min(max(s, 0.0), e2.length)))
    return rows, pts


def rho_diameter(model: MetricGraphModel) -> tuple[float, GraphPoint, GraphPoint]:
    """Exact diameter of the path metric with a maximizing pair.

    Ties are broken by the lexicographically smallest pair of
    ``(edge id, offset)`` keys.
    """
    edges = sorted(model.edges, key=lambda e: e.id)
    found = []
    for i, e1 in enumerate(edges):
        for e2 in edges[i:]:
            rows, pts = _candidates_for_pair(model, e1, e2)
            if not pts:
                continue
            P = np.array(pts)
            vals = np.min(rows[:, 0][None, :] + P @ rows[:, 1:].T, axis=1)
            for (t, s), val in zip(pts, vals):
                found.append((float(val), e1.id, t, e2.id, s))
    best = max(f[0] for f in found)
    return _select(model, found, best, path_distance)


def _select(model, found, best, metric, rel_tol: float = TIE_TOL):
    """Tie-broken argmax among candidate (value, e1, t, e2, s) tuples."""
    tol = rel_tol * max(abs(best), 1e-300)
    chosen = None
    for val, e1, t, e2, s in found:
        if val < best - tol:
            continue
        x = model.point(e1, t)
        y = model.point(e2, s)
        kx, ky = model.point_key(x), model.point_key(y)
        if ky < kx:
            x, y, kx, ky = y, x, ky, kx
        key = (kx, ky)
        if chosen is None or key < chosen[0]:
            chosen = (key, x, y)
    _, x, y = chosen
    return metric(model, x, y), x, y
