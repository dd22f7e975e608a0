import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_graph
from mgopt.errors import EmptyBoundary, NoParallelEdges, PointOffModel
from mgopt.generators import complete, path, pumpkin, star
from mgopt.graph import build_model
from mgopt.harmonic import (
    PiecewiseLinearFunction,
    energy,
    harmonic_extension,
    is_harmonic,
    laplacian_matrix,
    reduce_parallel,
)
from mgopt.resistance import resistance


def test_laplacian_rows_sum_to_zero(corpus):
    for g in corpus[:20]:
        A = laplacian_matrix(g)
        np.testing.assert_allclose(A.sum(axis=1), 0.0, atol=1e-12)
        np.testing.assert_allclose(A, A.T)


def test_parallel_edges_add_conductance():
    A = laplacian_matrix(pumpkin(3, 3.0))
    assert A[0, 1] == pytest.approx(-3.0)


def test_extension_on_path_is_linear():
    g = path(2.0, 4)
    f = harmonic_extension(g, {0: 1.0, 4: -1.0})
    np.testing.assert_allclose(f.values, [1.0, 0.5, 0.0, -0.5, -1.0], atol=1e-14)
    assert f(g.point(1, 0.25)) == pytest.approx(0.25)


def test_extension_on_star_is_weighted_mean():
    g = build_model([(0, 0, 1, 1.0), (1, 0, 2, 2.0), (2, 0, 3, 4.0)])
    f = harmonic_extension(g, {1: 1.0, 2: 2.0, 3: 4.0})
    c = np.array([1.0, 0.5, 0.25])
    assert f.at_vertex(0) == pytest.approx((c @ [1.0, 2.0, 4.0]) / c.sum())


def test_energy_equals_inverse_resistance(corpus):
    for g in corpus[:30]:
        a, b = g.vertices[0], g.vertices[-1]
        f = harmonic_extension(g, {a: 1.0, b: 0.0})
        r = resistance(g, g.vertex_point(a), g.vertex_point(b))
        assert energy(f) == pytest.approx(1.0 / r, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_extension_is_harmonic_and_bounded(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, max_edges=7)
    if g.n_vertices < 2:
        return
    k = int(rng.integers(1, g.n_vertices))
    bd = {v: float(rng.normal()) for v in g.vertices[:k]}
    f = harmonic_extension(g, bd)
    free = g.vertices[k:]
    ok, res = is_harmonic(f, free)
    assert ok, res
    # maximum principle
    lo, hi = min(bd.values()), max(bd.values())
    assert np.all(f.values >= lo - 1e-12) and np.all(f.values <= hi + 1e-12)


def test_is_harmonic_detects_kink():
    g = path(2.0, 2)
    f = PiecewiseLinearFunction(g, np.array([0.0, 1.0, 0.0]))
    ok, res = is_harmonic(f, [1])
    assert not ok and res == pytest.approx(2.0)


def test_empty_boundary():
    with pytest.raises(EmptyBoundary):
        harmonic_extension(path(), {})


def test_boundary_must_be_vertex():
    g = path()
    with pytest.raises(PointOffModel):
        harmonic_extension(g, {g.point(0, 0.5): 1.0})


def test_reduce_parallel_preserves_resistance():
    g = complete(4)
    g2 = build_model([*g.edges, (99, 0, 1, 0.3)])
    red, length = reduce_parallel(g2, 0, 1)
    assert length == pytest.approx(1.0 / (6.0 + 1.0 / 0.3))
    for a, b in [(0, 1), (0, 2), (2, 3)]:
        r1 = resistance(g2, g2.vertex_point(a), g2.vertex_point(b))
        r2 = resistance(red, red.vertex_point(a), red.vertex_point(b))
        assert r1 == pytest.approx(r2, rel=1e-12)


def test_reduce_parallel_needs_two_edges():
    with pytest.raises(NoParallelEdges):
        reduce_parallel(star(3), 0, 1)


def test_reduce_pumpkin_to_path():
    red, length = reduce_parallel(pumpkin(4, 4.0), 0, 1)
    assert red.n_edges == 1 and math.isclose(length, 0.25)
