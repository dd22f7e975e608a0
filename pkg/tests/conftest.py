"""Shared fixtures: random graph corpora and independent brute-force oracles."""

from __future__ import annotations

import math

import numpy as np
import pytest

from mgopt.graph import GraphPoint, MetricGraphModel, build_model


def random_graph(rng: np.random.Generator, max_edges: int = 8, loops: bool = True) -> MetricGraphModel:
    """Connected multigraph: a random spanning tree plus extra edges (parallel edges and loops allowed)."""
    n_edges = int(rng.integers(1, max_edges + 1))
    n_vertices = int(rng.integers(2, n_edges + 2))
    edges = []
    for v in range(1, n_vertices):
        edges.append((int(rng.integers(0, v)), v))
    while len(edges) < n_edges:
        u, v = (int(a) for a in rng.integers(0, n_vertices, size=2))
        if u == v and not loops:
            continue
        edges.append((u, v))
    lengths = rng.uniform(0.1, 2.0, size=len(edges))
    return build_model([(i, u, v, float(ell)) for i, ((u, v), ell) in enumerate(zip(edges, lengths))])


def random_tree(rng: np.random.Generator, max_edges: int = 12) -> MetricGraphModel:
    n_edges = int(rng.integers(1, max_edges + 1))
    lengths = rng.uniform(0.1, 2.0, size=n_edges)
    return build_model([(i, int(rng.integers(0, i + 1)), i + 1, float(lengths[i])) for i in range(n_edges)])


def random_point(rng: np.random.Generator, model: MetricGraphModel) -> GraphPoint:
    if rng.random() < 0.15:
        return GraphPoint.at_vertex(model.vertices[int(rng.integers(model.n_vertices))])
    e = model.edges[int(rng.integers(model.n_edges))]
    return model.point(e.id, float(rng.uniform(0.0, e.length)))


CORPUS_SEED = 20240611

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])


@pytest.fixture(scope="session")
def corpus() -> list[MetricGraphModel]:
    rng = np.random.default_rng(CORPUS_SEED)
    return [random_graph(rng) for _ in range(100)]


@pytest.fixture(scope="session")
def trees() -> list[MetricGraphModel]:
    rng = np.random.default_rng(CORPUS_SEED + 1)
    return [random_tree(rng) for _ in range(50)]


# ---------------------------------------------------------------------------
# oracles (independent of the library's solvers)


class ResistanceOracle:
    """Closed-form point resistances from the pseudoinverse of the vertex Laplacian."""

    def __init__(self, model: MetricGraphModel):
        self.model = model
        idx = {v: i for i, v in enumerate(model.vertices)}
        n = len(idx)
        lap = np.zeros((n, n))
        for e in model.edges:
            a, b = idx[e.u], idx[e.v]
            w = 1.0 / e.length
            lap[a, a] += w
            lap[b, b] += w
            lap[a, b] -= w
            lap[b, a] -= w
        g = np.linalg.pinv(lap)
        d = np.diag(g)
        self.R = d[:, None] + d[None, :] - 2 * g
        self.idx = idx

    def _ends(self, e):
        return self.idx[e.u], self.idx[e.v], e.length, self.R[self.idx[e.u], self.idx[e.v]]

    def pair(self, e1, t, e2, s):
        """``r`` between offset(s) ``t`` on edge ``e1`` and ``s`` on edge ``e2`` (broadcasts)."""
        e1, e2 = self.model.edge_by_id[e1], self.model.edge_by_id[e2]
        t, s = np.asarray(t, float), np.asarray(s, float)
        if e1.id == e2.id:
            u, v, ell, rho = self._ends(e1)
            d = np.abs(t - s)
            return d * (rho / ell + (ell - d) * (ell - rho) / ell**2)
        u1, v1, l1, r1 = self._ends(e1)
        u2, v2, l2, r2 = self._ends(e2)
        a, b = t / l1, s / l2
        R = self.R
        bil = (
            (1 - a) * (1 - b) * R[u1, u2]
            + (1 - a) * b * R[u1, v2]
            + a * (1 - b) * R[v1, u2]
            + a * b * R[v1, v2]
        )
        return bil + a * (1 - a) * (l1 - r1) + b * (1 - b) * (l2 - r2)

    def __call__(self, x: GraphPoint, y: GraphPoint) -> float:
        m = self.model
        ex, tx = m.point_key(x)
        ey, ty = m.point_key(y)
        return float(self.pair(ex, tx, ey, ty))


def brute_force_diameter(model: MetricGraphModel, refine: int = 64, zoom: int = 14) -> float:
    """Max resistance on a grid of step ``l_min / refine``, then local zooming around the best cells."""
    orc = ResistanceOracle(model)
    h = min(e.length for e in model.edges) / refine
    cands = []
    edges = list(model.edges)
    for i, e1 in enumerate(edges):
        t = np.linspace(0.0, e1.length, max(2, math.ceil(e1.length / h) + 1))
        for e2 in edges[i:]:
            s = np.linspace(0.0, e2.length, max(2, math.ceil(e2.length / h) + 1))
            vals = orc.pair(e1.id, t[:, None], e2.id, s[None, :])
            a, b = np.unravel_index(int(np.argmax(vals)), vals.shape)
            cands.append((float(vals[a, b]), e1, t[a], e2, s[b], t[1] - t[0], s[1] - s[0]))
    top = max(c[0] for c in cands)
    best = top
    for val, e1, t0, e2, s0, ht, hs in cands:
        if val < top * (1 - 1e-3):
            continue
        for _ in range(zoom):
            t = np.clip(np.linspace(t0 - 2 * ht, t0 + 2 * ht, 21), 0.0, e1.length)
            s = np.clip(np.linspace(s0 - 2 * hs, s0 + 2 * hs, 21), 0.0, e2.length)
            vals = orc.pair(e1.id, t[:, None], e2.id, s[None, :])
            a, b = np.unravel_index(int(np.argmax(vals)), vals.shape)
            t0, s0, ht, hs = t[a], s[b], ht / 5, hs / 5
            best = max(best, float(vals[a, b]))
    return best
