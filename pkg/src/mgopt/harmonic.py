"""Weighted Laplacians, harmonic extension, energy and parallel reduction."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np

from .errors import EmptyBoundary, NoParallelEdges, PointOffModel, ValidationError
from .graph import Edge, GraphPoint, MetricGraphModel
from .linalg import solve_spd

# flux balance tolerance, relative to max conductance * max(range(f), |f|)
HARMONIC_TOL = 1e-8


@dataclass(frozen=True)
class WeightedLaplacian:
    """Vertex-indexed matrix with off-diagonals ``-sum 1/length`` over parallel edges.

    Rows and columns follow ``vertices``.
    """

    matrix: np.ndarray
    vertices: tuple[int, ...]


def laplacian_matrix(model: MetricGraphModel) -> np.ndarray:
    n = model.n_vertices
    iu, iv = model.endpoint_index
    c = 1.0 / model.lengths
    A = np.zeros((n, n))
    np.add.at(A, (iu, iv), -c)
    np.add.at(A, (iv, iu), -c)
    np.add.at(A, (iu, iu), c)
    np.add.at(A, (iv, iv), c)
    return A


def assemble_laplacian(model: MetricGraphModel) -> WeightedLaplacian:
    return WeightedLaplacian(laplacian_matrix(model), model.vertices)


@dataclass(frozen=True)
class PiecewiseLinearFunction:
    """Edgewise-linear function given by its vertex values.

    ``values[i]`` is the value at ``model.vertices[i]``.
    """

    model: MetricGraphModel
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.model.n_vertices,):
            raise ValidationError("one value per vertex expected")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("values must be finite")
        object.__setattr__(self, "values", vals)

    def at_vertex(self, v: int) -> float:
        return float(self.values[self.model.vertex_index[v]])

    def __call__(self, p: GraphPoint) -> float:
        p = self.model.canonical(p)
        if p.is_vertex:
            return self.at_vertex(p.vertex)
        e = self.model.edge_by_id[p.edge]
        tau = p.offset / e.length
        return (1.0 - tau) * self.at_vertex(e.u) + tau * self.at_vertex(e.v)

    def as_dict(self) -> dict[int, float]:
        return {v: float(x) for v, x in zip(self.model.vertices, self.values)}

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def _vertex_indices(model: MetricGraphModel, ids: Iterable) -> np.ndarray:
    vi = model.vertex_index
    out = []
    for v in ids:
        if isinstance(v, GraphPoint):
            v = model.canonical(v)
            if not v.is_vertex:
                raise PointOffModel("boundary points must be vertices; subdivide first")
            v = v.vertex
        if v not in vi:
            raise PointOffModel(f"unknown vertex id {v}")
        out.append(vi[v])
    return np.array(out, dtype=int)


def harmonic_extension(
    model: MetricGraphModel, boundary: Mapping[int, float]
) -> PiecewiseLinearFunction:
    """Edgewise-linear function with the given vertex values, harmonic elsewhere.

    Parameters
    ----------
    boundary
        Map from vertex id (or vertex :class:`GraphPoint`) to prescribed value.

    Raises
    ------
    EmptyBoundary
        If ``boundary`` is empty.
    """
    if not boundary:
        raise EmptyBoundary("harmonic extension needs at least one boundary vertex")
    bidx = _vertex_indices(model, boundary.keys())
    bval = np.array([float(x) for x in boundary.values()])
    n = model.n_vertices
    free = np.ones(n, dtype=bool)
    free[bidx] = False
    f = np.zeros(n)
    f[bidx] = bval
    if free.any():
        A = laplacian_matrix(model)
        fi = np.flatnonzero(free)
        rhs = -A[np.ix_(fi, bidx)] @ bval
        f[fi] = solve_spd(A[np.ix_(fi, fi)], rhs)
    return PiecewiseLinearFunction(model, f)


def energy(f: PiecewiseLinearFunction) -> float:
    """Dirichlet energy ``sum (f(u) - f(v))^2 / length``."""
    iu, iv = f.model.endpoint_index
    d = f.values[iu] - f.values[iv]
    return float(math.fsum(d * d / f.model.lengths))


def flux_residual(f: PiecewiseLinearFunction) -> np.ndarray:
    """Net outward slope ``sum_e (f(w) - f(x)) / length`` at every vertex."""
    return -(laplacian_matrix(f.model) @ f.values)


def is_harmonic(f: PiecewiseLinearFunction, free_vertices: Iterable[int]) -> tuple[bool, float]:
    """Check flux balance at ``free_vertices``.

    Returns the verdict and the largest absolute residual found.
    """
    idx = _vertex_indices(f.model, free_vertices)
    if idx.size == 0:
        return True, 0.0
    res = float(np.max(np.abs(flux_residual(f)[idx])))
    # a constant function has zero range, so fall back to its size
    size = max(float(np.ptp(f.values)), f.sup_norm)
    cmax = float(np.max(1.0 / f.model.lengths))
    return res <= HARMONIC_TOL * cmax * size, res


def reduce_parallel(model: MetricGraphModel, x1: int, x2: int) -> tuple[MetricGraphModel, float]:
    """Replace all edges between ``x1`` and ``x2`` by one edge of harmonic-sum length.

    The new edge gets a fresh id and runs from ``x1`` to ``x2``.

    Raises
    ------
    NoParallelEdges
        If fewer than two edges join ``x1`` and ``x2``.
    """
    bundle = [e for e in model.edges if {e.u, e.v} == {x1, x2} and x1 != x2]
    if len(bundle) < 2:
        raise NoParallelEdges(f"fewer than two edges between {x1} and {x2}")
    length = 1.0 / math.fsum(1.0 / e.length for e in bundle)
    ids = {e.id for e in bundle}
    edges = [e for e in model.edges if e.id not in ids]
    edges.append(Edge(model.next_edge_id(), x1, x2, length))
    return MetricGraphModel(model.vertices, tuple(edges), model.history), length
