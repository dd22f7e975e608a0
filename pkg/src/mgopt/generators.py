"""Standard equilateral example graphs.

Every generator takes the total length ``L`` (default 1) and spreads it
evenly over the edges.
"""

from __future__ import annotations

import itertools
from collections.abc import Sequence

from .errors import ValidationError
from .graph import MetricGraphModel, build_model


def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


def path(L: float = 1.0, n_edges: int = 1) -> MetricGraphModel:
    """Interval ``[0, L]`` cut into ``n_edges`` equal edges (vertex 0 at offset 0)."""
    _need(n_edges >= 1, "path needs at least one edge")
    h = L / n_edges
    return build_model([(i, i, i + 1, h) for i in range(n_edges)])


def cycle(L: float = 1.0, n_edges: int = 2) -> MetricGraphModel:
    """Circle of circumference ``L`` as ``n_edges >= 1`` equal arcs."""
    _need(n_edges >= 1, "cycle needs at least one edge")
    h = L / n_edges
    return build_model([(i, i, (i + 1) % n_edges, h) for i in range(n_edges)])


def star(n: int, L: float = 1.0) -> MetricGraphModel:
    """Center 0 joined to leaves ``1..n``."""
    _need(n >= 1, "star needs at least one leaf")
    return build_model([(i, 0, i + 1, L / n) for i in range(n)])


def complete(n: int, L: float = 1.0) -> MetricGraphModel:
    """Complete graph on vertices ``0..n-1`` with ``n(n-1)/2`` equal edges."""
    _need(n >= 2, "complete graph needs n >= 2")
    pairs = list(itertools.combinations(range(n), 2))
    h = L / len(pairs)
    return build_model([(i, a, b, h) for i, (a, b) in enumerate(pairs)])


def pumpkin(n: int, L: float = 1.0) -> MetricGraphModel:
    """Two vertices 0, 1 joined by ``n`` parallel edges."""
    _need(n >= 1, "pumpkin needs n >= 1")
    return build_model([(i, 0, 1, L / n) for i in range(n)])


def butterfly(n: int, L: float = 1.0) -> MetricGraphModel:
    """Outer vertices 0 and 2, each joined to the center 1 by ``n`` parallel edges.

    Edges ``0..n-1`` run 0 -> 1 and edges ``n..2n-1`` run 2 -> 1, so offsets
    measure the distance from the outer vertex.
    """
    _need(n >= 1, "butterfly needs n >= 1")
    h = L / (2 * n)
    edges = [(i, 0, 1, h) for i in range(n)]
    edges += [(n + i, 2, 1, h) for i in range(n)]
    return build_model(edges)


def pumpkin_chain(sizes: Sequence[int], L: float = 1.0) -> MetricGraphModel:
    """Pumpkins with ``sizes[i]`` parallel edges glued in a row.

    Each block gets total length ``L / len(sizes)``.
    """
    _need(len(sizes) >= 1 and all(s >= 1 for s in sizes), "block sizes must be >= 1")
    block = L / len(sizes)
    edges = []
    eid = 0
    for b, s in enumerate(sizes):
        for _ in range(s):
            edges.append((eid, b, b + 1, block / s))
            eid += 1
    return build_model(edges)


def figure_eight(L: float = 1.0) -> MetricGraphModel:
    """Two loops of length ``L/2`` at one vertex (normalized to four edges)."""
    return build_model([(0, 0, 0, L / 2), (1, 0, 0, L / 2)])


GENERATORS = {
    "path": path,
    "cycle": cycle,
    "star": star,
    "complete": complete,
    "pumpkin": pumpkin,
    "butterfly": butterfly,
    "pumpkin-chain": pumpkin_chain,
    "figure-eight": figure_eight,
}
