"""Multi-start simplex search for higher optimal eigenvalues and the Weyl scan."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.optimize import minimize

from .errors import ValidationError
from .graph import GraphPoint, MetricGraphModel, total_length
from .optimize import interlacing_bounds
from .spectral import AtomicSpectrum, DiscreteMeasure, _atom_eigenvalues, spectrum

log = logging.getLogger(__name__)

MAX_ITERS = 2000
# final polish tolerances (normalized offsets/logits, objective in units of 4k^2/L)
XATOL = 1e-9
FATOL = 1e-9
# screening tolerances for the individual restarts
SCREEN_XATOL = 1e-6
SCREEN_FATOL = 1e-8
# relative slack when testing the interlacing sandwich
BOUND_SLACK = 1e-9


def default_restarts(k: int) -> int:
    return 32 * (k + 1)


@dataclass(frozen=True)
class KthSearchResult:
    """Best measure found for the k-th optimal eigenvalue.

    ``value`` is an upper estimate of the optimum; ``lower`` and ``upper``
    are the interlacing bounds.  ``converged`` means the final simplex run
    met its tolerances and the value lies inside the bounds.
    """

    k: int
    value: float
    measure: DiscreteMeasure
    lower: float
    upper: float
    restarts: int
    converged: bool
    evaluations: int = 0
    extra_atom_improved: bool = False
    seed_value: float = math.inf


@dataclass
class _Run:
    value: float
    edges: np.ndarray
    x: np.ndarray
    success: bool
    nfev: int


@njit(cache=True)
def _objective_kernel(z, edges, k, unit, penalty, RV, iu, iv, lengths, rho):
    m = edges.size
    offs = np.empty(m)
    out = 0.0
    for i in range(m):
        t = z[i]
        c = min(max(t, 0.0), 1.0)
        out += abs(t - c)
        offs[i] = c * lengths[edges[i]]
    w = np.empty(m)
    wmax = 0.0
    for i in range(m - 1):
        wmax = max(wmax, z[m + i])
    tot = 0.0
    for i in range(m):
        w[i] = np.exp((z[m + i] if i < m - 1 else 0.0) - wmax)
        tot += w[i]
    w /= tot
    lam = _atom_eigenvalues(RV, iu, iv, lengths, rho, edges, offs, w)[k]
    if not np.isfinite(lam):
        return penalty + out
    return lam / unit + out


class _Objective:
    """k-th eigenvalue as a function of (normalized offsets, mass logits), in units of 4k^2/L.

    Offsets outside [0, 1] are clamped and charged a linear penalty so the
    simplex never drifts along flat directions.
    """

    def __init__(self, ev: AtomicSpectrum, k: int, edges: np.ndarray, unit: float, penalty: float):
        self.ev = ev
        self.k = k
        self.edges = np.asarray(edges, dtype=np.int64)
        self.m = len(edges)
        self.lengths = ev.lengths[self.edges]
        self.unit = unit
        self.penalty = penalty

    def decode(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        tau = np.clip(z[: self.m], 0.0, 1.0)
        w = np.append(z[self.m :], 0.0)
        w = np.exp(w - np.max(w))
        return tau * self.lengths, w / w.sum()

    def __call__(self, z: np.ndarray) -> float:
        ev = self.ev
        return _objective_kernel(
            z, self.edges, self.k, self.unit, self.penalty, ev.RV, ev.iu, ev.iv, ev.lengths, ev.rho
        )


def _simplex(z0: np.ndarray, m: int, step: float) -> np.ndarray:
    n = z0.size
    S = np.tile(z0, (n + 1, 1))
    for i in range(n):
        h = step
        if i < m and z0[i] + h > 1.0:
            h = -step
        S[i + 1, i] += h
    return S


def _nelder_mead(
    obj: _Objective, z0: np.ndarray, max_iters: int, step: float = 0.1, strict: bool = False
) -> _Run:
    res = minimize(
        obj,
        z0,
        method="Nelder-Mead",
        options={
            "initial_simplex": _simplex(z0, obj.m, step),
            "xatol": XATOL if strict else SCREEN_XATOL,
            "fatol": FATOL if strict else SCREEN_FATOL,
            "maxiter": max_iters,
            "maxfev": 2 * max_iters,
            "adaptive": True,
        },
    )
    return _Run(float(res.fun), obj.edges, np.asarray(res.x), bool(res.success), int(res.nfev))


def _apportion(lengths: np.ndarray, total: int) -> np.ndarray:
    """At least one piece per edge, remaining pieces by highest length per piece."""
    n = np.ones(len(lengths), dtype=int)
    for _ in range(total - len(lengths)):
        n[int(np.argmax(lengths / n))] += 1
    return n


def structured_seed(model: MetricGraphModel, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray] | None:
    """k+1 atoms at the vertices of an even subdivision, weighted by adjacent length.

    Edges are cut into ``k + 1 + #E - #V`` pieces in total (in proportion to
    their lengths), so the subdivision has exactly ``k + 1`` vertices; each
    gets half the length of its adjacent pieces.  On an interval this is the
    optimal measure.  Returns ``(edge indices, normalized offsets, masses)``
    or None when ``k + 1 < #V``.
    """
    ne, nv = model.n_edges, model.n_vertices
    pieces = k + 1 + ne - nv
    if pieces < ne:
        return None
    lengths = model.lengths
    n = _apportion(lengths, pieces)
    L = float(lengths.sum())
    iu, iv = model.endpoint_index
    vmass = np.zeros(nv)
    vedge: dict[int, tuple[int, float]] = {}
    edges, taus, masses = [], [], []
    for e in range(ne):
        h = lengths[e] / n[e]
        vmass[iu[e]] += h / 2
        vmass[iv[e]] += h / 2
        vedge.setdefault(int(iu[e]), (e, 0.0))
        vedge.setdefault(int(iv[e]), (e, 1.0))
        for j in range(1, n[e]):
            edges.append(e)
            taus.append(j / n[e])
            masses.append(h)
    for v in range(nv):
        e, t = vedge[v]
        edges.append(e)
        taus.append(t)
        masses.append(vmass[v])
    return np.array(edges), np.array(taus), np.array(masses) / L


def _logits(masses: np.ndarray) -> np.ndarray:
    lw = np.log(masses)
    return lw[:-1] - lw[-1]


def _start(obj_edges, taus, masses) -> np.ndarray:
    return np.concatenate([taus, _logits(masses)])


def _measure(model: MetricGraphModel, edges, offs, mass) -> DiscreteMeasure:
    ids = [model.edges[int(e)].id for e in edges]
    atoms = sorted(
        ((model.point(i, t), float(m)) for i, t, m in zip(ids, offs, mass)),
        key=lambda a: model.point_key(a[0]),
    )
    return DiscreteMeasure.on(model, atoms)


def lambda_k_min_search(
    model: MetricGraphModel,
    k: int,
    restarts: int | None = None,
    seed: int = 0,
    max_iters: int = MAX_ITERS,
    threads: int = 1,
    extra_atoms: bool = True,
) -> KthSearchResult:
    """Heuristic minimization of the k-th eigenvalue over probability measures.

    Restart 0 starts from :func:`structured_seed`; the others place atoms
    on random edges (chosen in proportion to length) at uniform offsets.
    Every tenth restart uses ``k + 2`` atoms when ``extra_atoms`` is set.
    The best point is polished with one more simplex run.

    Parameters
    ----------
    restarts
        Total number of starts, default ``32 (k + 1)``.
    threads
        Worker threads for the restarts; the result does not depend on it.
    """
    lower, upper = interlacing_bounds(model, k)
    L = total_length(model)
    if k == 0:
        mu = DiscreteMeasure.on(model, [(GraphPoint.at_vertex(model.vertices[0]), 1.0)])
        return KthSearchResult(0, 0.0, mu, lower, upper, 0, True)
    if restarts is None:
        restarts = default_restarts(k)
    restarts = max(int(restarts), 1)
    unit = 4.0 * k * k / L
    penalty = 10.0 * max(upper / unit, 1.0)
    ev = AtomicSpectrum(model)
    p_edge = model.lengths / L
    children = np.random.SeedSequence(seed).spawn(restarts)
    seeded = structured_seed(model, k)

    def one(r: int) -> tuple[_Run, int]:
        rng = np.random.default_rng(children[r])
        if r == 0 and seeded is not None:
            edges, taus, masses = seeded
        else:
            m = k + 2 if extra_atoms and r % 10 == 9 else k + 1
            edges = rng.choice(model.n_edges, size=m, p=p_edge)
            taus = rng.uniform(0.0, 1.0, size=m)
            masses = np.exp(rng.normal(0.0, 0.3, size=m))
            masses /= masses.sum()
        obj = _Objective(ev, k, np.asarray(edges), unit, penalty)
        return _nelder_mead(obj, _start(edges, taus, masses), max_iters), len(edges)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(one, range(restarts)))
    else:
        runs = [one(r) for r in range(restarts)]

    nfev = sum(run.nfev for run, _ in runs)
    seed_value = runs[0][0].value * unit if seeded is not None else math.inf
    best_plain = min((run.value for run, m in runs if m == k + 1), default=math.inf)
    best_extra = min((run.value for run, m in runs if m == k + 2), default=math.inf)
    extra_improved = best_extra < best_plain * (1 - 1e-9)
    if extra_improved:
        log.info("k=%d: %d atoms beat %d atoms (%.12g < %.12g)", k, k + 2, k + 1, best_extra * unit, best_plain * unit)

    # deterministic choice: smallest value, ties to the lowest restart index
    vbest = min(run.value for run, _ in runs)
    best_run = next(run for run, _ in runs if run.value <= vbest + 1e-12 * abs(vbest))
    obj = _Objective(ev, k, best_run.edges, unit, penalty)
    polish = _nelder_mead(obj, best_run.x, max_iters, step=0.01, strict=True)
    final = polish if polish.value <= best_run.value else best_run
    nfev += polish.nfev

    offs, mass = obj.decode(final.x)
    mu = _measure(model, final.edges, offs, mass)
    if mu.n_atoms > k:
        value = spectrum(model, mu).eigenvalue(k)
    else:
        value = math.inf
    inside = lower * (1 - BOUND_SLACK) <= value <= upper * (1 + BOUND_SLACK)
    return KthSearchResult(
        k, value, mu, lower, upper, restarts, bool(final.success and inside), nfev, extra_improved, seed_value
    )


# ---------------------------------------------------------------------------
# Weyl scan


@dataclass(frozen=True)
class WeylRow:
    k: int
    estimate: float
    lower: float
    upper: float
    ratio: float
    lower_ratio: float
    upper_ratio: float


@dataclass(frozen=True)
class WeylTable:
    rows: tuple[WeylRow, ...] = field(default_factory=tuple)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "estimate", "lower", "upper", "ratio", "lower_ratio", "upper_ratio"])
        for r in self.rows:
            w.writerow([r.k, *(repr(float(x)) for x in (r.estimate, r.lower, r.upper, r.ratio, r.lower_ratio, r.upper_ratio))])
        return buf.getvalue()


def weyl_scan(
    model: MetricGraphModel,
    k_max: int,
    restarts: int = 3,
    seed: int = 0,
    max_iters: int = MAX_ITERS,
    bounds_only: bool = False,
    threads: int = 1,
) -> WeylTable:
    """Search estimates and interlacing bounds for ``k = 1..k_max``, normalized by ``4k^2/L``.

    With ``bounds_only`` the estimate column is NaN.
    """
    if k_max < 1:
        raise ValidationError("k_max must be >= 1")
    L = total_length(model)
    rows = []
    for k in range(1, k_max + 1):
        unit = 4.0 * k * k / L
        if bounds_only:
            lo, up = interlacing_bounds(model, k)
            est = math.nan
        else:
            res = lambda_k_min_search(model, k, restarts=restarts, seed=seed, max_iters=max_iters, threads=threads)
            lo, up, est = res.lower, res.upper, res.value
        rows.append(WeylRow(k, est, lo, up, est / unit, lo / unit, up / unit))
    return WeylTable(tuple(rows))
