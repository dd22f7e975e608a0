"""Optimal eigenvalues: the first one exactly, Dirichlet variants, partitions and bounds."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedGraph, ValidationError
from .graph import GraphPoint, MetricGraphModel, build_model, subdivide_at, total_length
from .harmonic import PiecewiseLinearFunction
from .resistance import f_xy, grounded_resistance_maximum, resistance_diameter
from .spectral import DiscreteMeasure, ZERO_TOL, two_point_measure


@dataclass(frozen=True)
class OptimalFirstEigenvalue:
    """Minimum of the first nonzero eigenvalue over probability measures.

    ``measure`` is ``(delta_x + delta_y) / 2`` and ``eigenfunction`` the
    corresponding ``f_xy`` (on the model refined at ``x`` and ``y``).
    """

    value: float
    x: GraphPoint
    y: GraphPoint
    diameter: float
    measure: DiscreteMeasure
    eigenfunction: PiecewiseLinearFunction


def lambda1_min(model: MetricGraphModel) -> OptimalFirstEigenvalue:
    """``4 / diam_r`` together with a minimizing two-point measure."""
    d, x, y = resistance_diameter(model)
    return OptimalFirstEigenvalue(4.0 / d, x, y, d, two_point_measure(model, x, y), f_xy(model, x, y))


def lambda0_min_dirichlet(model: MetricGraphModel, dirichlet) -> tuple[float, GraphPoint]:
    """Smallest first Dirichlet eigenvalue over probability measures.

    The minimum is attained by a Dirac measure at a maximizer of the
    resistance to the Dirichlet set, and equals the reciprocal of that
    maximal resistance.
    """
    r, x, _ = grounded_resistance_maximum(model, dirichlet)
    return 1.0 / r, x


# ---------------------------------------------------------------------------
# two-partitions


@dataclass(frozen=True)
class Partition2:
    """Nodal-domain partition from the optimal ``f_xy``.

    ``pieces[i]`` is a submodel of the model refined at the zeros of ``f``;
    ``boundaries[i]`` holds its vertices where ``f`` vanishes.
    ``energies[i]`` is ``2 * lambda0_min_dirichlet(piece, boundary)`` and
    ``value`` their maximum.
    """

    pieces: tuple[MetricGraphModel, MetricGraphModel]
    boundaries: tuple[tuple[int, ...], tuple[int, ...]]
    weights: tuple[float, float]
    energies: tuple[float, float]
    value: float
    lambda1: float
    connected: tuple[bool, bool]
    eigenfunction: PiecewiseLinearFunction
    cuts: tuple[GraphPoint, ...]


def _submodel(model: MetricGraphModel, edges) -> tuple[MetricGraphModel | None, bool]:
    verts = sorted({e.u for e in edges} | {e.v for e in edges})
    try:
        return build_model(list(edges), verts), True
    except DisconnectedGraph:
        return None, False


def partition_l2(model: MetricGraphModel) -> Partition2:
    """Split ``G`` along the zeros of the optimal ``f_xy`` and evaluate the partition energy."""
    opt = lambda1_min(model)
    f = opt.eigenfunction
    refined = f.model
    tol = ZERO_TOL * f.sup_norm
    cuts = []
    for e in refined.edges:
        a, b = f.at_vertex(e.u), f.at_vertex(e.v)
        if abs(a) > tol and abs(b) > tol and a * b < 0:
            cuts.append(GraphPoint.on_edge(e.id, e.length * a / (a - b)))
    fine, pm = subdivide_at(refined, cuts)
    # f is linear on edges, so the new vertices carry exact zeros
    vals = np.array([f(_pullback(refined, fine, v)) for v in fine.vertices])
    zero = {v for v, x in zip(fine.vertices, vals) if abs(x) <= tol}
    vals[[fine.vertex_index[v] for v in zero]] = 0.0
    g = PiecewiseLinearFunction(fine, vals)

    plus, minus = [], []
    for e in fine.edges:
        a, b = g.at_vertex(e.u), g.at_vertex(e.v)
        if max(a, b) > 0:
            plus.append(e)
        elif min(a, b) < 0:
            minus.append(e)
    pieces, bnds, energies, conn = [], [], [], []
    for edges in (plus, minus):
        sub, ok = _submodel(fine, edges)
        conn.append(ok)
        if sub is None:
            pieces.append(None)
            bnds.append(())
            energies.append(math.nan)
            continue
        bd = tuple(v for v in sub.vertices if v in zero)
        pieces.append(sub)
        bnds.append(bd)
        lam0, _ = lambda0_min_dirichlet(sub, [GraphPoint.at_vertex(v) for v in bd])
        energies.append(2.0 * lam0)
    mapped = tuple(fine.canonical(pm(c)) for c in cuts)
    return Partition2(
        tuple(pieces), tuple(bnds), (0.5, 0.5), tuple(energies), max(energies), opt.value, tuple(conn), g, mapped
    )


def _pullback(coarse: MetricGraphModel, fine: MetricGraphModel, v: int) -> GraphPoint:
    if v in coarse.vertex_index:
        return GraphPoint.at_vertex(v)
    eid, t = fine.point_key(GraphPoint.at_vertex(v))
    for old in coarse.edge_by_id:
        for start, _, new in fine.history.pieces.get(old, ()):
            if new == eid:
                return coarse.point(old, start + t)
    raise AssertionError("vertex not found in coarse model")


# ---------------------------------------------------------------------------
# Cheeger-type constant


def essential_edges(model: MetricGraphModel) -> tuple[list[int], list[tuple[int, int, float]]]:
    """Suppress degree-two vertices; loops are allowed in the result.

    A component that is a single cycle ends as one vertex with one loop.
    """
    verts = set(model.vertices)
    edges = {e.id: (e.u, e.v, e.length) for e in model.edges}
    next_id = max(edges) + 1
    changed = True
    while changed:
        changed = False
        inc: dict[int, list[int]] = defaultdict(list)
        for eid, (u, v, _) in edges.items():
            inc[u].append(eid)
            inc[v].append(eid)
        for w in sorted(verts):
            ends = inc[w]
            if len(ends) != 2 or ends[0] == ends[1]:
                continue
            e1, e2 = ends
            u1, v1, l1 = edges.pop(e1)
            u2, v2, l2 = edges.pop(e2)
            a = v1 if u1 == w else u1
            b = v2 if u2 == w else u2
            edges[next_id] = (a, b, l1 + l2)
            next_id += 1
            verts.discard(w)
            changed = True
            break
    return sorted(verts), [edges[k] for k in sorted(edges)]


def _is_bridge(verts, edges, i) -> bool:
    u, v, _ = edges[i]
    if u == v:
        return False
    adj = defaultdict(set)
    for j, (a, b, _) in enumerate(edges):
        if j != i:
            adj[a].add(b)
            adj[b].add(a)
    seen = {u}
    stack = [u]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return v not in seen


def cheeger_constant(model: MetricGraphModel) -> tuple[float, str]:
    """Cheeger-type constant on an essential model and which term attains it.

    The witness is ``"bridge"`` (``1/l`` of a bridge), ``"pair"``
    (``1/l1 + 1/l2`` of two distinct edges) or ``"edge"`` (``4/l``).
    """
    verts, edges = essential_edges(model)
    inv = [1.0 / ell for _, _, ell in edges]
    terms = []
    bridges = [inv[i] for i in range(len(edges)) if _is_bridge(verts, edges, i)]
    if bridges:
        terms.append((min(bridges), "bridge"))
    if len(edges) >= 2:
        two = sorted(inv)[:2]
        terms.append((two[0] + two[1], "pair"))
    terms.append((4.0 * min(inv), "edge"))
    best = min(t[0] for t in terms)
    for val, name in terms:
        if val <= best * (1 + 1e-12):
            return best, name
    raise AssertionError


# ---------------------------------------------------------------------------
# closed forms and bounds


def lambda_k_min_path(L: float, k: int) -> tuple[float, DiscreteMeasure]:
    """``4 k^2 / L`` and the unique minimizing measure on ``[0, L]``.

    The measure lives on ``generators.path(L)``: masses ``1/(2k)`` at the
    ends and ``1/k`` at ``jL/k`` for ``0 < j < k``.  For ``k = 0`` it is the
    unit mass at 0.
    """
    from .generators import path

    if k < 0:
        raise ValidationError("k must be >= 0")
    if not L > 0:
        raise ValidationError("L must be > 0")
    model = path(L)
    if k == 0:
        return 0.0, DiscreteMeasure.on(model, [(GraphPoint.at_vertex(0), 1.0)])
    atoms = [(GraphPoint.at_vertex(0), 1.0 / (2 * k)), (GraphPoint.at_vertex(1), 1.0 / (2 * k))]
    atoms += [(GraphPoint.on_edge(0, j * L / k), 1.0 / k) for j in range(1, k)]
    return 4.0 * k * k / L, DiscreteMeasure.on(model, atoms)


def interlacing_bounds(model: MetricGraphModel, k: int) -> tuple[float, float]:
    """Lower and upper bounds on the k-th optimal eigenvalue from cutting and gluing intervals."""
    if k < 0:
        raise ValidationError("k must be >= 0")
    L = total_length(model)
    ne, nv = model.n_edges, model.n_vertices
    lower = 4.0 * (k - (ne - 1)) ** 2 / L if k >= ne - 1 else 0.0
    upper = 4.0 * (k + 2 * ne - nv) ** 2 / L
    return lower, upper


def diameter_bounds(model: MetricGraphModel, rho_diam: float) -> tuple[float, float]:
    """``(4 / diam, 4 L / diam^2)`` bracketing the first optimal eigenvalue."""
    L = total_length(model)
    return 4.0 / rho_diam, 4.0 * L / rho_diam**2
