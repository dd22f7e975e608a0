import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_graph, random_point
from mgopt.errors import (
    DanglingEndpoint,
    DisconnectedGraph,
    DuplicateId,
    NonpositiveLength,
    PointOffModel,
    ValidationError,
)
from mgopt.generators import butterfly, complete, cycle, figure_eight, path, pumpkin, pumpkin_chain, star
from mgopt.graph import (
    Edge,
    GraphPoint,
    build_model,
    degree,
    path_distance,
    rho_diameter,
    scale,
    subdivide_at,
    total_length,
)


def _floyd(model):
    n = model.n_vertices
    D = np.full((n, n), np.inf)
    np.fill_diagonal(D, 0.0)
    ix = model.vertex_index
    for e in model.edges:
        a, b = ix[e.u], ix[e.v]
        D[a, b] = D[b, a] = min(D[a, b], e.length)
    for k in range(n):
        D = np.minimum(D, D[:, k : k + 1] + D[k : k + 1, :])
    return D


def _rho_oracle(model, x, y):
    D = _floyd(model)
    ix = model.vertex_index
    ex, tx = model.point_key(x)
    ey, ty = model.point_key(y)
    a, b = model.edge_by_id[ex], model.edge_by_id[ey]
    best = math.inf
    if ex == ey:
        best = abs(tx - ty)
    for (p, dp), (q, dq) in itertools.product(((a.u, tx), (a.v, a.length - tx)), ((b.u, ty), (b.v, b.length - ty))):
        best = min(best, dp + D[ix[p], ix[q]] + dq)
    return best


class TestBuildModel:
    def test_accepts_tuples_dicts_and_edges(self):
        m1 = build_model([(0, 0, 1, 1.0), (1, 1, 2, 2.0)])
        m2 = build_model([{"id": 0, "u": 0, "v": 1, "length": 1.0}, Edge(1, 1, 2, 2.0)])
        assert m1 == m2
        assert total_length(m1) == 3.0

    def test_isolated_vertex_disconnects(self):
        with pytest.raises(DisconnectedGraph):
            build_model([(0, 0, 1, 1.0)], vertices=[0, 1, 2])

    def test_two_components(self):
        with pytest.raises(DisconnectedGraph):
            build_model([(0, 0, 1, 1.0), (1, 2, 3, 1.0)])

    @pytest.mark.parametrize("length", [0.0, -1.0, math.inf, math.nan])
    def test_bad_length(self, length):
        with pytest.raises(NonpositiveLength):
            build_model([(0, 0, 1, length)])

    def test_duplicate_edge_id(self):
        with pytest.raises(DuplicateId):
            build_model([(0, 0, 1, 1.0), (0, 1, 2, 1.0)])

    def test_dangling_endpoint(self):
        with pytest.raises(DanglingEndpoint):
            build_model([(0, 0, 1, 1.0)], vertices=[0])

    def test_empty(self):
        with pytest.raises(ValidationError):
            build_model([])

    def test_loop_is_split(self):
        m = build_model([(0, 0, 0, 2.0)])
        assert m.n_edges == 2 and m.n_vertices == 2
        assert all(e.u != e.v for e in m.edges)
        assert total_length(m) == pytest.approx(2.0)
        # the retired loop id still addresses points
        p = m.point(0, 1.5)
        assert path_distance(m, m.vertex_point(0), p) == pytest.approx(0.5)

    def test_figure_eight_normal_form(self):
        m = figure_eight()
        assert (m.n_vertices, m.n_edges) == (3, 4)
        assert degree(m, m.vertex_point(0)) == 4


class TestPoints:
    def test_snap_to_vertex(self):
        m = path(1.0)
        assert m.point(0, 0.0).is_vertex
        assert m.point(0, 1.0).vertex == 1
        assert not m.point(0, 0.5).is_vertex

    def test_offset_off_edge(self):
        m = path(1.0)
        with pytest.raises(PointOffModel):
            m.point(0, 1.5)
        with pytest.raises(PointOffModel):
            m.point(7, 0.5)

    def test_str(self):
        assert str(GraphPoint.at_vertex(3)) == "v:3"
        assert str(GraphPoint.on_edge(2, 0.5)) == "2:0.5"

    def test_degree(self):
        m = star(3)
        assert degree(m, m.vertex_point(0)) == 3
        assert degree(m, m.vertex_point(1)) == 1
        assert degree(m, m.point(0, 0.1)) == 2


class TestGenerators:
    @pytest.mark.parametrize(
        "model, nv, ne",
        [
            (path(2.0, 3), 4, 3),
            (cycle(1.0, 3), 3, 3),
            (star(4), 5, 4),
            (complete(5), 5, 10),
            (pumpkin(3), 2, 3),
            (butterfly(3), 3, 6),
            (pumpkin_chain([2, 3]), 3, 5),
        ],
    )
    def test_shapes(self, model, nv, ne):
        assert (model.n_vertices, model.n_edges) == (nv, ne)

    @pytest.mark.parametrize("L", [0.5, 1.0, 3.0])
    def test_total_length(self, L):
        for g in (path(L), cycle(L), star(3, L), complete(4, L), pumpkin(3, L), butterfly(2, L), figure_eight(L)):
            assert total_length(g) == pytest.approx(L, rel=1e-14)


class TestPathMetric:
    def test_matches_oracle_on_corpus(self, corpus):
        rng = np.random.default_rng(1)
        for g in corpus[:40]:
            for _ in range(10):
                x, y = random_point(rng, g), random_point(rng, g)
                assert path_distance(g, x, y) == pytest.approx(_rho_oracle(g, x, y), rel=1e-12, abs=1e-14)

    @pytest.mark.parametrize("n", [4, 5, 6, 7])
    def test_complete_graph_diameter(self, n):
        d, _, _ = rho_diameter(complete(n))
        assert d == pytest.approx(4 / (n * (n - 1)), rel=1e-12)

    @pytest.mark.parametrize(
        "model, expected", [(path(2.0), 2.0), (cycle(3.0), 1.5), (star(3), 2 / 3), (pumpkin(4), 0.25)]
    )
    def test_simple_diameters(self, model, expected):
        d, x, y = rho_diameter(model)
        assert d == pytest.approx(expected, rel=1e-12)
        assert path_distance(model, x, y) == pytest.approx(d, rel=1e-12)

    def test_diameter_beats_grid(self, corpus):
        for g in corpus[:25]:
            d, x, y = rho_diameter(g)
            assert path_distance(g, x, y) == pytest.approx(d, rel=1e-10)
            pts = [g.point(e.id, t * e.length) for e in g.edges for t in np.linspace(0, 1, 9)]
            grid = max(_rho_oracle(g, p, q) for p in pts for q in pts)
            assert grid <= d * (1 + 1e-10)


class TestTransforms:
    def test_scale(self):
        g = complete(4)
        h = scale(g, 3.0)
        assert total_length(h) == pytest.approx(3.0)
        with pytest.raises(ValidationError):
            scale(g, 0.0)

    def test_subdivide_preserves_distances(self, corpus):
        rng = np.random.default_rng(2)
        for g in corpus[:20]:
            cuts = [random_point(rng, g) for _ in range(3)]
            fine, pm = subdivide_at(g, cuts)
            assert total_length(fine) == pytest.approx(total_length(g), rel=1e-12)
            for c in cuts:
                assert fine.canonical(pm(c)).is_vertex
            for _ in range(5):
                x, y = random_point(rng, g), random_point(rng, g)
                assert path_distance(fine, pm(x), pm(y)) == pytest.approx(path_distance(g, x, y), rel=1e-10, abs=1e-12)

    def test_subdivide_compose(self):
        g = path(1.0)
        g1, m1 = subdivide_at(g, [g.point(0, 0.5)])
        g2, m2 = subdivide_at(g1, [m1(g.point(0, 0.25))])
        both = m1.compose(m2)
        p = g.point(0, 0.1)
        assert path_distance(g2, both(p), g2.vertex_point(0)) == pytest.approx(0.1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_metric_axioms(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, max_edges=6)
    x, y, z = (random_point(rng, g) for _ in range(3))
    dxy = path_distance(g, x, y)
    assert path_distance(g, x, x) == 0.0
    assert dxy == pytest.approx(path_distance(g, y, x), rel=1e-12, abs=1e-15)
    assert dxy <= path_distance(g, x, z) + path_distance(g, z, y) + 1e-12
