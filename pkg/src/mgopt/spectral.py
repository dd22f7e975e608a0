"""Finitely supported measures and the spectrum of their Laplacians.

For an atomic measure the operator acts on functions on the atoms.  Its
matrix is ``M^{-1} S`` where ``S`` is the Schur complement of the weighted
Laplacian onto the atoms (the Dirichlet-to-Neumann matrix) and ``M`` the
diagonal of masses.  Eigenpairs come from the symmetric matrix
``M^{-1/2} S M^{-1/2}``.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import (
    EmptyDirichletSet,
    EmptyMeasure,
    IdenticallyZeroSegment,
    IndexOutOfRange,
    MeasureMeetsDirichlet,
    NegativeDensity,
    NotAPath,
    ValidationError,
)
from .graph import GraphPoint, MetricGraphModel, path_distance, subdivide_at, total_length
from .harmonic import PiecewiseLinearFunction, energy, harmonic_extension, laplacian_matrix
from .linalg import schur_complement, sym_eig

# atoms closer than MERGE_TOL * L(G) are merged
MERGE_TOL = 1e-12
# vertex values of f_xy with |f| <= ZERO_TOL * |f|_inf count as zeros
ZERO_TOL = 1e-11
# eigenvalues within GROUP_TOL * lambda_max are displayed as one
GROUP_TOL = 1e-8


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely many atoms with positive masses.

    Build with :meth:`on` to canonicalize points against a model and merge
    near-coincident atoms.
    """

    points: tuple[GraphPoint, ...]
    masses: tuple[float, ...]

    def __post_init__(self):
        if len(self.points) != len(self.masses):
            raise ValidationError("one mass per atom expected")
        if not self.points:
            raise EmptyMeasure("a measure needs at least one atom")
        for m in self.masses:
            if not (math.isfinite(m) and m > 0):
                raise ValidationError(f"atom masses must be finite and > 0, got {m}")

    @classmethod
    def on(
        cls, model: MetricGraphModel, atoms: Iterable[tuple[GraphPoint, float]], normalize: bool = False
    ) -> "DiscreteMeasure":
        pts: list[GraphPoint] = []
        ms: list[float] = []
        tol = MERGE_TOL * total_length(model)
        for p, m in atoms:
            m = float(m)
            if not (math.isfinite(m) and m > 0):
                raise ValidationError(f"atom masses must be finite and > 0, got {m}")
            p = model.canonical(p)
            for i, q in enumerate(pts):
                if q == p or path_distance(model, p, q) <= tol:
                    ms[i] += m
                    break
            else:
                pts.append(p)
                ms.append(m)
        mu = cls(tuple(pts), tuple(ms))
        return mu.normalized() if normalize else mu

    @property
    def total_mass(self) -> float:
        return math.fsum(self.masses)

    @property
    def is_probability(self) -> bool:
        return abs(self.total_mass - 1.0) <= 1e-12

    @property
    def n_atoms(self) -> int:
        return len(self.points)

    def normalized(self) -> "DiscreteMeasure":
        tot = self.total_mass
        return DiscreteMeasure(self.points, tuple(m / tot for m in self.masses))

    def mapped(self, pm) -> "DiscreteMeasure":
        return DiscreteMeasure(tuple(pm(p) for p in self.points), self.masses)

    def atoms(self) -> list[tuple[GraphPoint, float]]:
        return list(zip(self.points, self.masses))


def two_point_measure(model: MetricGraphModel, x: GraphPoint, y: GraphPoint) -> DiscreteMeasure:
    """``(delta_x + delta_y) / 2``."""
    return DiscreteMeasure.on(model, [(x, 0.5), (y, 0.5)])


def _canonical_dirichlet(model: MetricGraphModel, dirichlet) -> tuple[GraphPoint, ...]:
    if dirichlet is None:
        return ()
    pts = tuple(dict.fromkeys(model.canonical(a) for a in dirichlet))
    if not pts:
        raise EmptyDirichletSet("Dirichlet set must be nonempty")
    return pts


def refine_for_measure(
    model: MetricGraphModel, mu: DiscreteMeasure, dirichlet: Sequence[GraphPoint] | None = None
) -> tuple[MetricGraphModel, DiscreteMeasure, tuple[GraphPoint, ...]]:
    """Subdivide so that every atom and Dirichlet point is a vertex.

    Raises
    ------
    MeasureMeetsDirichlet
        If an atom lies in the Dirichlet set.
    """
    pts = [model.canonical(p) for p in mu.points]
    A = _canonical_dirichlet(model, dirichlet)
    if set(pts) & set(A):
        raise MeasureMeetsDirichlet("the measure charges the Dirichlet set")
    refined, pm = subdivide_at(model, [*pts, *A])
    mu2 = DiscreteMeasure(tuple(refined.canonical(pm(p)) for p in pts), mu.masses)
    A2 = tuple(refined.canonical(pm(a)) for a in A)
    return refined, mu2, A2


def dtn_matrix(
    model: MetricGraphModel, support: Sequence[int], dirichlet: Sequence[int] | None = None
) -> np.ndarray:
    """Schur complement of the (optionally grounded) Laplacian onto ``support``.

    ``support`` and ``dirichlet`` are vertex ids; rows follow ``support``.
    """
    vi = model.vertex_index
    B = [vi[v] for v in support]
    if not B:
        raise EmptyMeasure("support must be nonempty")
    A = [vi[v] for v in (dirichlet or ())]
    if set(A) & set(B):
        raise MeasureMeetsDirichlet("support meets the Dirichlet set")
    L = laplacian_matrix(model)
    if A:
        rest = np.array([i for i in range(model.n_vertices) if i not in set(A)])
        L = L[np.ix_(rest, rest)]
        pos = {int(j): i for i, j in enumerate(rest)}
        B = [pos[b] for b in B]
    return schur_complement(L, B)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of the measure Laplacian.

    ``eigenvectors[:, k]`` holds the values of the k-th eigenfunction on the
    atoms ``support`` (vertex ids of ``model``), normalized so that
    ``sum masses * f^2 = 1``.  Eigenvalues with index ``>= len(eigenvalues)``
    are infinite.
    """

    model: MetricGraphModel
    measure: DiscreteMeasure
    support: tuple[int, ...]
    masses: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    dirichlet: tuple[int, ...] = ()

    def eigenvalue(self, k: int) -> float:
        if k < 0:
            raise IndexOutOfRange("eigenvalue index must be >= 0")
        return float(self.eigenvalues[k]) if k < len(self.eigenvalues) else math.inf

    def groups(self) -> list[tuple[float, int]]:
        """(eigenvalue, multiplicity) with near-equal values grouped."""
        lam = self.eigenvalues
        tol = GROUP_TOL * max(float(np.max(np.abs(lam))), 1e-300)
        out: list[tuple[float, int]] = []
        for x in lam:
            if out and abs(x - out[-1][0]) <= tol:
                out[-1] = (out[-1][0], out[-1][1] + 1)
            else:
                out.append((float(x), 1))
        return out


def _fix_signs(V: np.ndarray) -> np.ndarray:
    # make the largest-magnitude entry of each column positive (first on ties)
    idx = np.argmax(np.abs(V) > (1 - 1e-9) * np.max(np.abs(V), axis=0), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def spectrum(
    model: MetricGraphModel, mu: DiscreteMeasure, dirichlet: Sequence[GraphPoint] | None = None
) -> SpectralDecomposition:
    """Eigenvalues (ascending) and eigenfunctions of the Laplacian of ``mu``."""
    refined, mu2, A = refine_for_measure(model, mu, dirichlet)
    support = tuple(p.vertex for p in mu2.points)
    avert = tuple(a.vertex for a in A)
    S = dtn_matrix(refined, support, avert or None)
    m = np.array(mu2.masses)
    d = 1.0 / np.sqrt(m)
    lam, V = sym_eig(d[:, None] * S * d[None, :])
    F = _fix_signs(d[:, None] * V)
    return SpectralDecomposition(refined, mu2, support, m, lam, F, avert)


def extend_eigenfunction(decomp: SpectralDecomposition, k: int) -> PiecewiseLinearFunction:
    """The k-th eigenfunction on the whole graph.

    It takes the eigenvector values on the atoms, vanishes on the Dirichlet
    set and is harmonic elsewhere.  On a path without Dirichlet points the
    atom values are recomputed from the eigenvalue by shooting from both
    ends, which keeps the sign of exponentially small values.
    """
    n = len(decomp.eigenvalues)
    if not 0 <= k < n:
        raise IndexOutOfRange(f"eigenfunction index {k} outside [0, {n})")
    vals = decomp.eigenvectors[:, k]
    if not decomp.dirichlet and _is_path(decomp.model):
        vals = _shoot_on_path(decomp, k)
    bdry = {v: float(x) for v, x in zip(decomp.support, vals)}
    for a in decomp.dirichlet:
        bdry[a] = 0.0
    return harmonic_extension(decomp.model, bdry)


def _is_path(model: MetricGraphModel) -> bool:
    return model.n_edges == model.n_vertices - 1 and all(len(model.incident[v]) <= 2 for v in model.vertices)


def _shoot_on_path(decomp: SpectralDecomposition, k: int) -> np.ndarray:
    # f is linear between atoms and constant beyond the outer ones; its slope
    # drops by lam * m_i * f_i across atom i.  Each direction is run up to the
    # largest entry, where the solution is dominant, and the halves are matched there.
    order, pos = path_order(decomp.model)
    where = dict(zip(order, pos))
    perm = np.argsort([where[v] for v in decomp.support])
    x = np.array([where[decomp.support[i]] for i in perm])
    m = decomp.masses[perm]
    v0 = decomp.eigenvectors[perm, k]
    lam = float(decomp.eigenvalues[k])
    n = x.size
    j = int(np.argmax(np.abs(v0)))
    f = np.empty(n)
    f[0], slope = 1.0, 0.0
    for i in range(j):
        slope -= lam * m[i] * f[i]
        f[i + 1] = f[i] + (x[i + 1] - x[i]) * slope
    g = np.empty(n)
    g[-1], slope = 1.0, 0.0
    for i in range(n - 1, j, -1):
        slope -= lam * m[i] * g[i]
        g[i - 1] = g[i] + (x[i] - x[i - 1]) * slope
    if not (f[j] != 0 and g[j] != 0 and np.all(np.isfinite(f[: j + 1])) and np.all(np.isfinite(g[j:]))):
        return decomp.eigenvectors[:, k]
    out = np.concatenate([f[:j] * (v0[j] / f[j]), [v0[j]], g[j + 1 :] * (v0[j] / g[j])])
    res = np.empty(n)
    res[perm] = out
    return res


def rayleigh_quotient(f: PiecewiseLinearFunction, mu: DiscreteMeasure) -> float:
    """``q(f) / sum m f(x)^2`` over the atoms of ``mu``."""
    norm2 = math.fsum(m * f(p) ** 2 for p, m in mu.atoms())
    return energy(f) / norm2


# ---------------------------------------------------------------------------
# paths


def path_order(model: MetricGraphModel) -> tuple[list[int], np.ndarray]:
    """Vertices of a path model in order with their arc-length positions.

    The walk starts at the endpoint with the smaller vertex id.

    Raises
    ------
    NotAPath
    """
    if model.n_edges != model.n_vertices - 1:
        raise NotAPath("model is not a path")
    ends = [v for v in model.vertices if len(model.incident[v]) == 1]
    if len(ends) != 2 or any(len(model.incident[v]) > 2 for v in model.vertices):
        raise NotAPath("model is not a path")
    order = [min(ends)]
    pos = [0.0]
    prev_edge = None
    while len(order) < model.n_vertices:
        v = order[-1]
        e = next(e for e in model.incident[v] if e.id != prev_edge)
        order.append(e.v if e.u == v else e.u)
        pos.append(pos[-1] + e.length)
        prev_edge = e.id
    return order, np.array(pos)


def path_zeros(f: PiecewiseLinearFunction, rel_tol: float = 0.0) -> list[float]:
    """Arc-length positions of the zeros of ``f`` on a path, endpoints included.

    Vertex values with ``|f| <= rel_tol * max |f|`` count as zeros.  The
    default keeps every nonzero value, since eigenfunctions of clustered
    atoms can be correctly signed far below any fixed threshold.

    Raises
    ------
    IdenticallyZeroSegment
        If ``f`` vanishes on a whole edge (or everywhere).
    """
    order, pos = path_order(f.model)
    vals = np.array([f.at_vertex(v) for v in order])
    fmax = float(np.max(np.abs(vals)))
    if fmax == 0.0:
        raise IdenticallyZeroSegment("function vanishes identically")
    zero = np.abs(vals) <= rel_tol * fmax
    zeros = []
    for i in range(len(vals)):
        if zero[i]:
            if i + 1 < len(vals) and zero[i + 1]:
                raise IdenticallyZeroSegment(f"function vanishes between {pos[i]} and {pos[i + 1]}")
            zeros.append(float(pos[i]))
        elif i + 1 < len(vals) and not zero[i + 1] and vals[i] * vals[i + 1] < 0:
            a, b = vals[i], vals[i + 1]
            zeros.append(float(pos[i] + (pos[i + 1] - pos[i]) * a / (a - b)))
    return zeros


def count_zeros_on_path(f: PiecewiseLinearFunction, rel_tol: float = 0.0) -> int:
    """Number of zeros of ``f`` strictly between the path endpoints."""
    _, pos = path_order(f.model)
    end = pos[-1]
    return sum(1 for z in path_zeros(f, rel_tol) if 0.0 < z < end)


# ---------------------------------------------------------------------------
# absolutely continuous measures


def _density_fn(density, edge_id: int, length: float) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(density, Mapping):
        density = density[edge_id]
        if callable(density):
            return lambda t: np.asarray(density(t), dtype=float) * np.ones_like(t)
    elif callable(density):
        return lambda t: np.asarray(density(edge_id, t), dtype=float) * np.ones_like(t)
    arr = np.atleast_1d(np.asarray(density, dtype=float))
    if arr.size == 1:
        return lambda t: np.full_like(t, arr[0])
    grid = np.linspace(0.0, length, arr.size)
    return lambda t: np.interp(t, grid, arr)


def discretize_ac(model: MetricGraphModel, density, n: int) -> DiscreteMeasure:
    """Composite midpoint rule for a density on the edges.

    Parameters
    ----------
    density
        A constant, a callable ``density(edge_id, t)``, or a mapping from
        edge id to a constant, a callable ``f(t)`` or an array of samples on
        a uniform grid over ``[0, length]`` (linearly interpolated).
    n
        Atoms per edge.  Each sits at the midpoint of one of ``n`` equal
        subintervals and carries ``density(mid) * length / n``.

    Raises
    ------
    NegativeDensity
    """
    if n < 1:
        raise ValidationError("need at least one atom per edge")
    atoms = []
    for e in sorted(model.edges, key=lambda e: e.id):
        h = e.length / n
        mids = (np.arange(n) + 0.5) * h
        vals = _density_fn(density, e.id, e.length)(mids)
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise NegativeDensity(f"density on edge {e.id} is negative or not finite")
        atoms += [(GraphPoint.on_edge(e.id, t), v * h) for t, v in zip(mids, vals) if v > 0]
    return DiscreteMeasure.on(model, atoms)


# ---------------------------------------------------------------------------
# fast evaluation for optimization loops


@njit(cache=True)
def _atom_resistances(RV, iu, iv, lengths, rho, edges, offsets):
    m = edges.size
    nv = RV.shape[0]
    tau = np.empty(m)
    Q = np.empty((m, nv))
    for i in range(m):
        e = edges[i]
        t = offsets[i] / lengths[e]
        t = min(max(t, 0.0), 1.0)
        tau[i] = t
        bump = t * (1.0 - t) * (lengths[e] - rho[e])
        for w in range(nv):
            Q[i, w] = (1.0 - t) * RV[iu[e], w] + t * RV[iv[e], w] + bump
    R = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            e = edges[j]
            ell = lengths[e]
            if edges[i] == e:
                d = abs(tau[i] - tau[j]) * ell
                r = d * (rho[e] / ell + (ell - d) * (ell - rho[e]) / (ell * ell))
            else:
                t = tau[j]
                r = (1.0 - t) * Q[i, iu[e]] + t * Q[i, iv[e]] + t * (1.0 - t) * (ell - rho[e])
            R[i, j] = r
            R[j, i] = r
    return R


@njit(cache=True)
def _atom_eigenvalues(RV, iu, iv, lengths, rho, edges, offsets, masses):
    R = _atom_resistances(RV, iu, iv, lengths, rho, edges, offsets)
    m = masses.size
    Rm = R @ masses
    mRm = masses @ Rm
    T = np.empty((m, m))
    s = np.sqrt(masses)
    for i in range(m):
        for j in range(m):
            T[i, j] = -0.5 * (R[i, j] - Rm[i] - Rm[j] + mRm) * s[i] * s[j]
    mu = np.linalg.eigvalsh(T)
    lam = np.empty(m)
    lam[0] = 0.0
    top = mu[m - 1]
    # mu[0] is the direction removed by the projection
    for k in range(1, m):
        x = mu[m - k]
        lam[k] = 1.0 / x if x > 1e-13 * top else np.inf
    return lam


class AtomicSpectrum:
    """Eigenvalues for measures given as raw (edge index, offset, mass) atoms.

    Works from the resistance matrix ``R`` among the atoms instead of a
    subdivided model.  With ``P = I - 1 m^T`` the nonzero eigenvalues of the
    measure Laplacian are the reciprocals of the nonzero eigenvalues of
    ``M^{1/2} P (-R/2) P^T M^{1/2}``.  ``R`` follows in closed form from the
    vertex resistances: for ``x`` at fraction ``tau`` of edge ``(u, v)``,
    ``r(x, w) = (1-tau) r(u, w) + tau r(v, w) + tau (1-tau) (l - r(u, v))``.
    Coinciding atoms simply produce an infinite eigenvalue.
    """

    def __init__(self, model: MetricGraphModel):
        self.model = model
        self.iu, self.iv = model.endpoint_index
        self.lengths = model.lengths
        Lp = np.linalg.pinv(laplacian_matrix(model), hermitian=True)
        d = np.diag(Lp)
        self.RV = np.maximum(d[:, None] + d[None, :] - 2 * Lp, 0.0)
        np.fill_diagonal(self.RV, 0.0)
        self.rho = self.RV[self.iu, self.iv]

    def resistances(self, edges, offsets) -> np.ndarray:
        """Pairwise resistance matrix of the atoms."""
        return _atom_resistances(
            self.RV, self.iu, self.iv, self.lengths, self.rho,
            np.asarray(edges, dtype=np.int64), np.asarray(offsets, dtype=float),
        )

    def eigenvalues(self, edges, offsets, masses) -> np.ndarray:
        """Ascending eigenvalues ``0 = lambda_0 <= lambda_1 <= ...``, ``inf`` where atoms coincide."""
        return _atom_eigenvalues(
            self.RV, self.iu, self.iv, self.lengths, self.rho,
            np.asarray(edges, dtype=np.int64), np.asarray(offsets, dtype=float),
            np.asarray(masses, dtype=float),
        )
