"""Effective resistance between points, the ``f_xy`` potential and the resistance diameter.

The resistance between ``x_t`` on edge ``e1`` and ``y_s`` on edge ``e2`` is
a quadratic polynomial in ``(t, s)`` on each rectangle ``e1 != e2`` and on
each triangle ``t <= s`` of a single edge.  Patches are fitted from
samples and validated on held-out samples.  If validation fails, the
patch is maximized on a dense grid instead.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import CoincidentPoints, EmptyDirichletSet, MeasureMeetsDirichlet
from .graph import Edge, GraphPoint, MetricGraphModel, _select, subdivide_at
from .harmonic import PiecewiseLinearFunction, harmonic_extension, laplacian_matrix
from .linalg import cholesky

# patch acceptance: held-out residual <= PATCH_TOL * max sampled r
PATCH_TOL = 1e-7
# candidate maxima within RESIST_TIE_TOL (relative) count as ties
RESIST_TIE_TOL = 1e-10
# fallback grid resolution per edge
FALLBACK_STEPS = 256
# interior critical points closer than this (relative) to the boundary are
# dropped; the boundary candidates already cover them and subdividing that
# close to a vertex would create a near-zero edge
CANDIDATE_MARGIN = 1e-9

_QUARTERS = (0.0, 0.25, 0.5, 0.75, 1.0)


class _SeriesLaw:
    """Point resistances from the vertex Green function of ``model``.

    A point at fraction ``a`` of an edge ``(u, v)`` of length ``l`` is
    eliminated with the series law

        r(x, w) = (1 - a) r(u, w) + a r(v, w) + a (1 - a) (l - r(u, v))

    instead of being made a vertex.  This equals the grounded solve on the
    subdivided model, but the factored matrix never contains the near-zero
    edges that subdividing next to a vertex would create.

    Parameters
    ----------
    ground : sequence of vertex ids, optional
        Vertices shorted together and held at 0.  Without it the model is
        grounded at its first vertex and only differences are used.
    """

    def __init__(self, model: MetricGraphModel, ground: Sequence[int] | None = None):
        self.model = model
        vi = model.vertex_index
        n = model.n_vertices
        mask = np.ones(n, dtype=bool)
        if ground is None:
            mask[0] = False
        else:
            mask[[vi[v] for v in ground]] = False
        idx = np.flatnonzero(mask)
        A = laplacian_matrix(model)
        K = np.zeros((n, n))
        if idx.size:
            K[np.ix_(idx, idx)] = sla.cho_solve((cholesky(A[np.ix_(idx, idx)]), True), np.eye(idx.size))
        K = 0.5 * (K + K.T)
        # d: resistance of each vertex to the ground; R: vertex resistances
        # in the network with the ground shorted
        self.d = np.diag(K).copy()
        self.R = np.maximum(self.d[:, None] + self.d[None, :] - 2.0 * K, 0.0)
        np.fill_diagonal(self.R, 0.0)

    def _coords(self, points: Sequence[GraphPoint]):
        m = self.model
        vi = m.vertex_index
        k = len(points)
        eid = np.full(k, -1)
        iu = np.zeros(k, dtype=int)
        iv = np.zeros(k, dtype=int)
        a = np.zeros(k)
        ell = np.zeros(k)
        for j, p in enumerate(points):
            p = m.canonical(p)
            if p.is_vertex:
                iu[j] = iv[j] = vi[p.vertex]
                continue
            e = m.edge_by_id[p.edge]
            eid[j], iu[j], iv[j] = e.id, vi[e.u], vi[e.v]
            a[j], ell[j] = p.offset / e.length, e.length
        slack = a * (1.0 - a) * (ell - self.R[iu, iv])
        return eid, iu, iv, a, ell, slack

    def to_ground(self, points: Sequence[GraphPoint]) -> np.ndarray:
        """Resistance from each point to the ground."""
        _, iu, iv, a, _, slack = self._coords(points)
        return (1.0 - a) * self.d[iu] + a * self.d[iv] + slack

    def pairwise(self, points: Sequence[GraphPoint]) -> np.ndarray:
        """Matrix of resistances among ``points`` (ground not shorted in)."""
        eid, iu, iv, a, ell, slack = self._coords(points)
        R = self.R
        a1, a0 = a[:, None], (1.0 - a)[:, None]
        b1, b0 = a[None, :], (1.0 - a)[None, :]
        out = (
            a0 * b0 * R[np.ix_(iu, iu)]
            + a0 * b1 * R[np.ix_(iu, iv)]
            + a1 * b0 * R[np.ix_(iv, iu)]
            + a1 * b1 * R[np.ix_(iv, iv)]
            + slack[:, None]
            + slack[None, :]
        )
        # two interior points of one edge: parallel law on the edge itself
        same = (eid[:, None] == eid[None, :]) & (eid[:, None] >= 0)
        if same.any():
            i, j = np.nonzero(same)
            ln = ell[i]
            rho = R[iu[i], iv[i]]
            dist = np.abs(a[i] - a[j]) * ln
            out[i, j] = dist * (rho / ln + (ln - dist) * (ln - rho) / ln**2)
        np.fill_diagonal(out, 0.0)
        return np.maximum(out, 0.0)


def resistance(model: MetricGraphModel, x: GraphPoint, y: GraphPoint) -> float:
    """Effective resistance ``r(x, y)`` (0 when ``x == y``).

    Equals the grounded solve ``L f = e_x`` on the model subdivided at
    ``x`` and ``y`` with ``y`` grounded, evaluated as ``f(x)``; the points
    are eliminated in closed form (see :class:`_SeriesLaw`).
    """
    x = model.canonical(x)
    y = model.canonical(y)
    if x == y:
        return 0.0
    # fixed orientation makes r exactly symmetric
    if model.point_key(y) < model.point_key(x):
        x, y = y, x
    return float(_SeriesLaw(model).pairwise([x, y])[0, 1])


def _vertex_of(model: MetricGraphModel, p: GraphPoint) -> int:
    p = model.canonical(p)
    assert p.is_vertex
    return p.vertex


def resistance_matrix(model: MetricGraphModel, points: Sequence[GraphPoint]) -> np.ndarray:
    """Pairwise resistances among ``points`` from a single factorization."""
    return _SeriesLaw(model).pairwise(points)


def _grounded_green(model: MetricGraphModel, nodes: np.ndarray, ground: int = 0) -> np.ndarray:
    """Entries ``(L_g^{-1})[nodes, nodes]`` of the Laplacian grounded at vertex index ``ground``.

    Rows and columns of the grounded vertex are zero.
    """
    A = laplacian_matrix(model)
    n = model.n_vertices
    keep = np.flatnonzero(np.arange(n) != ground)
    Lf = cholesky(A[np.ix_(keep, keep)])
    E = np.zeros((n, nodes.size))
    E[nodes, np.arange(nodes.size)] = 1.0
    X = np.zeros((n, nodes.size))
    X[keep] = sla.cho_solve((Lf, True), E[keep])
    K = X[nodes]
    return 0.5 * (K + K.T)


def f_xy(model: MetricGraphModel, x: GraphPoint, y: GraphPoint) -> PiecewiseLinearFunction:
    """Harmonic function with ``f(x) = 1`` and ``f(y) = -1``.

    The result lives on the model refined at ``x`` and ``y``.

    Raises
    ------
    CoincidentPoints
        If ``x == y``.
    """
    x = model.canonical(x)
    y = model.canonical(y)
    if x == y:
        raise CoincidentPoints("f_xy needs two distinct points")
    refined, pm = subdivide_at(model, [x, y])
    vx = _vertex_of(refined, pm(x))
    vy = _vertex_of(refined, pm(y))
    return harmonic_extension(refined, {vx: 1.0, vy: -1.0})


# ---------------------------------------------------------------------------
# quadratic patches


@dataclass(frozen=True)
class QuadraticPatch:
    """``r(x_t, y_s) = c00 + c10 t + c01 s + c20 t^2 + c11 t s + c02 s^2``.

    ``t`` and ``s`` are offsets (not normalized) on ``e1`` and ``e2``.  For
    ``e1 == e2`` the domain is the triangle ``0 <= t <= s <= length``.
    """

    e1: int
    e2: int
    len1: float
    len2: float
    coef: tuple[float, float, float, float, float, float]
    residual: float
    quadratic: bool

    @property
    def same_edge(self) -> bool:
        return self.e1 == self.e2

    def __call__(self, t, s):
        c00, c10, c01, c20, c11, c02 = self.coef
        return c00 + c10 * t + c01 * s + c20 * t * t + c11 * t * s + c02 * s * s

    def candidates(self) -> list[tuple[float, float]]:
        """Points of the domain where the maximum of the quadratic can occur."""
        c00, c10, c01, c20, c11, c02 = self.coef
        l1, l2 = self.len1, self.len2
        out: list[tuple[float, float]] = []

        def vertex_1d(a, b, lo, hi):
            # maximizer of a*u^2 + b*u on [lo, hi] when concave and interior
            m = CANDIDATE_MARGIN * (hi - lo)
            if a < 0:
                u = -b / (2 * a)
                if lo + m < u < hi - m:
                    return [u]
            return []

        if self.same_edge:
            out += [(0.0, 0.0), (0.0, l1), (l1, l1)]
            # t = 0, s in [0, l]
            out += [(0.0, u) for u in vertex_1d(c02, c01, 0.0, l1)]
            # s = l, t in [0, l]
            out += [(u, l1) for u in vertex_1d(c20, c10 + c11 * l1, 0.0, l1)]
            # t = s = u
            out += [(u, u) for u in vertex_1d(c20 + c11 + c02, c10 + c01, 0.0, l1)]
        else:
            out += [(0.0, 0.0), (l1, 0.0), (0.0, l2), (l1, l2)]
            for s0 in (0.0, l2):
                out += [(u, s0) for u in vertex_1d(c20, c10 + c11 * s0, 0.0, l1)]
            for t0 in (0.0, l1):
                out += [(t0, u) for u in vertex_1d(c02, c01 + c11 * t0, 0.0, l2)]
        det = 4 * c20 * c02 - c11 * c11
        if c20 < 0 and det > 0:
            t = (c11 * c01 - 2 * c02 * c10) / det
            s = (c11 * c10 - 2 * c20 * c01) / det
            m1, m2 = CANDIDATE_MARGIN * l1, CANDIDATE_MARGIN * l2
            if self.same_edge:
                if m1 < t and t + m1 < s < l1 - m1:
                    out.append((t, s))
            elif m1 < t < l1 - m1 and m2 < s < l2 - m2:
                out.append((t, s))
        return out


def _monomials(t: np.ndarray, s: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones_like(t), t, s, t * t, t * s, s * s])


def _sample_layout(same: bool):
    """Normalized (tau, sigma) fit and held-out samples."""
    if same:
        grid = [(a, b) for a in _QUARTERS for b in _QUARTERS if a <= b]
        held = [(0.25, 0.75), (0.0, 0.25), (0.25, 0.5), (0.5, 0.75)]
    else:
        grid = [(a, b) for a in _QUARTERS for b in _QUARTERS]
        held = [(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)]
    fit = [p for p in grid if p not in held]
    return fit, held


class _QuarterGrid:
    """All edges cut at quarter points, with resistances among the cut nodes."""

    def __init__(self, model: MetricGraphModel):
        self.model = model
        pts = []
        for e in model.edges:
            pts += [GraphPoint.on_edge(e.id, q * e.length) for q in _QUARTERS[1:-1]]
        refined, pm = subdivide_at(model, pts)
        vi = refined.vertex_index
        self.node: dict[tuple[int, float], int] = {}
        for e in model.edges:
            for q in _QUARTERS:
                p = refined.canonical(pm(model.point(e.id, q * e.length)))
                self.node[(e.id, q)] = vi[p.vertex]
        nodes = np.arange(refined.n_vertices)
        K = _grounded_green(refined, nodes)
        d = np.diag(K)
        self.R = np.maximum(d[:, None] + d[None, :] - 2.0 * K, 0.0)
        np.fill_diagonal(self.R, 0.0)

    def r(self, e1: int, q1: float, e2: int, q2: float) -> float:
        return float(self.R[self.node[(e1, q1)], self.node[(e2, q2)]])


def _fit(grid: _QuarterGrid, e1: Edge, e2: Edge) -> QuadraticPatch:
    same = e1.id == e2.id
    fit, held = _sample_layout(same)
    l1, l2 = e1.length, e2.length

    def values(pts):
        return np.array([grid.r(e1.id, a, e2.id, b) for a, b in pts])

    fa = np.array(fit)
    ha = np.array(held)
    yf = values(fit)
    yh = values(held)
    # fit in normalized coordinates for conditioning, then rescale
    c, *_ = np.linalg.lstsq(_monomials(fa[:, 0], fa[:, 1]), yf, rcond=None)
    pred = _monomials(ha[:, 0], ha[:, 1]) @ c
    scale = max(float(np.max(yf)), float(np.max(yh)), 1e-300)
    residual = float(np.max(np.abs(pred - yh))) / scale
    coef = (c[0], c[1] / l1, c[2] / l2, c[3] / l1**2, c[4] / (l1 * l2), c[5] / l2**2)
    return QuadraticPatch(
        e1.id, e2.id, l1, l2, tuple(float(v) for v in coef), residual, residual <= PATCH_TOL
    )


def fit_patch(model: MetricGraphModel, e1: int, e2: int) -> QuadraticPatch:
    """Quadratic model of ``r`` on the edge pair ``(e1, e2)``.

    ``residual`` is the largest held-out error relative to the largest
    sampled resistance; ``quadratic`` is False when it exceeds
    ``PATCH_TOL``.
    """
    return _fit(_QuarterGrid(model), model.edge_by_id[e1], model.edge_by_id[e2])


def _grid_maximum(model: MetricGraphModel, e1: Edge, e2: Edge) -> list[tuple[float, int, float, int, float]]:
    """Dense-grid maximum of ``r`` on an edge pair followed by local zooming."""
    n = FALLBACK_STEPS
    ts = np.linspace(0.0, e1.length, n + 1)
    ss = np.linspace(0.0, e2.length, n + 1)
    pts = [GraphPoint.on_edge(e1.id, t) for t in ts]
    if e2.id != e1.id:
        pts += [GraphPoint.on_edge(e2.id, s) for s in ss]
    R = resistance_matrix(model, pts)
    block = R[: n + 1, : n + 1] if e1.id == e2.id else R[: n + 1, n + 1 :]
    if e1.id == e2.id:
        block = np.triu(block)
    i, j = np.unravel_index(int(np.argmax(block)), block.shape)
    t, s = ts[i], ss[j]
    ht, hs = e1.length / n, e2.length / n
    best = float(block[i, j])
    for _ in range(6):
        tt = np.clip(np.linspace(t - ht, t + ht, 9), 0.0, e1.length)
        sl = np.clip(np.linspace(s - hs, s + hs, 9), 0.0, e2.length)
        cand = [(a, b) for a in tt for b in sl if e1.id != e2.id or a <= b]
        pts = [model.point(e1.id, a) for a, _ in cand] + [model.point(e2.id, b) for _, b in cand]
        R = resistance_matrix(model, pts)
        m = len(cand)
        vals = R[np.arange(m), m + np.arange(m)]
        k = int(np.argmax(vals))
        if vals[k] >= best:
            best = float(vals[k])
            t, s = cand[k]
        ht /= 4
        hs /= 4
    return [(best, e1.id, float(t), e2.id, float(s))]


def patches(model: MetricGraphModel) -> list[QuadraticPatch]:
    """Fitted patches for every edge pair ``e1.id <= e2.id``."""
    grid = _QuarterGrid(model)
    edges = sorted(model.edges, key=lambda e: e.id)
    return [_fit(grid, a, b) for i, a in enumerate(edges) for b in edges[i:]]


def resistance_diameter(model: MetricGraphModel) -> tuple[float, GraphPoint, GraphPoint]:
    """Maximum of ``r`` over ``G x G`` and a maximizing pair.

    Ties within ``RESIST_TIE_TOL`` are broken by the lexicographically
    smallest pair of ``(edge id, offset)`` keys.  The returned value is a
    fresh evaluation of :func:`resistance` at the chosen pair.
    """
    found = []
    for patch in patches(model):
        if patch.quadratic:
            for t, s in patch.candidates():
                found.append((float(patch(t, s)), patch.e1, t, patch.e2, s))
        else:
            found += _grid_maximum(model, model.edge_by_id[patch.e1], model.edge_by_id[patch.e2])
    best = max(f[0] for f in found)
    return _select(model, found, best, resistance, RESIST_TIE_TOL)


# ---------------------------------------------------------------------------
# resistance to a grounded set


def _dirichlet_vertices(model: MetricGraphModel, dirichlet) -> list[GraphPoint]:
    pts = [model.canonical(a) for a in dirichlet]
    if not pts:
        raise EmptyDirichletSet("Dirichlet set must be nonempty")
    return pts


def grounded_resistance(model: MetricGraphModel, x: GraphPoint, dirichlet) -> float:
    """Resistance from ``x`` to the set ``dirichlet`` shorted together (0 on the set)."""
    A_pts = _dirichlet_vertices(model, dirichlet)
    x = model.canonical(x)
    if x in A_pts:
        return 0.0
    refined, pm = subdivide_at(model, A_pts)
    ground = {_vertex_of(refined, pm(a)) for a in A_pts}
    return float(_SeriesLaw(refined, sorted(ground)).to_ground([pm(x)])[0])


def grounded_resistance_maximum(
    model: MetricGraphModel, dirichlet
) -> tuple[float, GraphPoint, float]:
    """Maximum over ``x`` of the grounded resistance ``r_A(x)``.

    ``r_A`` is quadratic along each edge between the cut points, so each
    edge of the refined model is fitted from three samples and checked at
    two more.  Returns ``(value, maximizer, worst relative residual)``.
    """
    A_pts = _dirichlet_vertices(model, dirichlet)
    refined, pm = subdivide_at(model, A_pts)
    pts = []
    for e in refined.edges:
        pts += [GraphPoint.on_edge(e.id, q * e.length) for q in _QUARTERS[1:-1]]
    fine, pm2 = subdivide_at(refined, pts)
    vi = fine.vertex_index
    ground = sorted({vi[_vertex_of(fine, pm2(pm(a)))] for a in A_pts})
    n = fine.n_vertices
    mask = np.ones(n, dtype=bool)
    mask[ground] = False
    idx = np.flatnonzero(mask)
    L = laplacian_matrix(fine)
    G = np.zeros((n, n))
    G[np.ix_(idx, idx)] = sla.cho_solve((cholesky(L[np.ix_(idx, idx)]), True), np.eye(idx.size))
    rA = np.diag(G)

    found = []
    worst = 0.0
    scale = max(float(np.max(rA)), 1e-300)
    for e in refined.edges:
        ys = np.array(
            [rA[vi[_vertex_of(fine, pm2(refined.point(e.id, q * e.length)))]] for q in _QUARTERS]
        )
        q = np.array(_QUARTERS)
        c = np.polyfit(q[[0, 2, 4]], ys[[0, 2, 4]], 2)
        worst = max(worst, float(np.max(np.abs(np.polyval(c, q[[1, 3]]) - ys[[1, 3]]))) / scale)
        # ends map to vertices exactly; offsets summed along the history need not
        cands = [(ys[0], refined.vertex_point(e.u)), (ys[4], refined.vertex_point(e.v))]
        if c[0] < 0:
            u = -c[1] / (2 * c[0])
            if CANDIDATE_MARGIN < u < 1 - CANDIDATE_MARGIN:
                cands.append((float(np.polyval(c, u)), refined.point(e.id, u * e.length)))
        found += cands
    best = max(f[0] for f in found)
    chosen = None
    for val, rp in found:
        if val < best - RESIST_TIE_TOL * best:
            continue
        p = _to_original(model, refined, rp)
        key = model.point_key(p)
        if chosen is None or key < chosen[0]:
            chosen = (key, p)
    xp = chosen[1]
    return grounded_resistance(model, xp, A_pts), xp, worst


def _to_original(model: MetricGraphModel, refined: MetricGraphModel, p: GraphPoint) -> GraphPoint:
    """Express a point of a refinement of ``model`` as a point of ``model``."""
    p = refined.canonical(p)
    if p.is_vertex and p.vertex in model.vertex_index:
        return GraphPoint.at_vertex(p.vertex)
    eid, t = refined.point_key(p)
    if eid in model.edge_by_id:
        return model.point(eid, t)
    for old in model.edge_by_id:
        for start, _, new in refined.history.pieces.get(old, ()):
            if new == eid:
                return model.point(old, start + t)
    raise AssertionError("point not found in the coarse model")


def check_dirichlet_disjoint(points: Sequence[GraphPoint], dirichlet: Sequence[GraphPoint]) -> None:
    if set(points) & set(dirichlet):
        raise MeasureMeetsDirichlet("measure support meets the Dirichlet set")
