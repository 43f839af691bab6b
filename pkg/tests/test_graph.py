import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stcomp.errors import InvalidTopologyError
from stcomp.graph import (
    Graph,
    build_complete,
    build_ring,
    dump_edge_list,
    from_edges,
    is_connected,
    laplacian,
    load_edge_list,
    random_connected,
    spectrum,
)

from oracles import ring_laplacian


def test_ring_degrees_and_diagonal():
    g = build_ring(10)
    L = laplacian(g)
    assert np.all(g.degrees() == 2)
    assert np.all(np.diag(L) == 2)


def test_ring3_laplacian_matches_definition():
    L = laplacian(build_ring(3))
    np.testing.assert_array_equal(L, [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])
    np.testing.assert_array_equal(L, ring_laplacian(3))


@pytest.mark.parametrize("n", [0, 1, 2])
def test_ring_too_small(n):
    with pytest.raises(InvalidTopologyError):
        build_ring(n)


def test_ring_rejects_nonpositive_weight():
    with pytest.raises(InvalidTopologyError):
        build_ring(5, weight=0.0)


def test_single_edge_laplacian():
    L = laplacian(from_edges(3, [(0, 1, 0.5)]))
    np.testing.assert_array_equal(L, [[0.5, -0.5, 0], [-0.5, 0.5, 0], [0, 0, 0]])


def test_ring10_spectrum():
    sp = spectrum(laplacian(build_ring(10)))
    assert sp.eigenvalues[0] == 0.0
    assert abs(sp.lambda2 - (2 - 2 * math.cos(2 * math.pi / 10))) < 1e-12
    assert abs(sp.lambda_max - 4) < 1e-12
    # circulant eigenvalues 2 - 2cos(2 pi k / n)
    expect = sorted(2 - 2 * math.cos(2 * math.pi * k / 10) for k in range(10))
    np.testing.assert_allclose(sp.eigenvalues, expect, atol=1e-12)


def test_complete_spectrum():
    sp = spectrum(laplacian(build_complete(4)))
    np.testing.assert_allclose(sp.eigenvalues, [0, 4, 4, 4], atol=1e-12)


def test_s_basis_orthonormal_complement():
    sp = spectrum(laplacian(build_ring(7)))
    S = sp.s_basis
    assert S.shape == (7, 6)
    np.testing.assert_allclose(S.T @ S, np.eye(6), atol=1e-12)
    np.testing.assert_allclose(S.T @ np.ones(7), 0, atol=1e-12)


def test_s_basis_disconnected_graph():
    sp = spectrum(laplacian(from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)])))
    S = sp.s_basis
    assert S.shape == (4, 3)
    np.testing.assert_allclose(S.T @ S, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(S.T @ np.ones(4), 0, atol=1e-12)


def test_connectivity():
    assert is_connected(build_ring(10))
    assert not is_connected(from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]))
    assert not is_connected(Graph(np.zeros((2, 2))))


@pytest.mark.parametrize("bad", [
    np.array([[0, 1], [2, 0]], float),
    np.array([[1, 0], [0, 0]], float),
    np.array([[0, -1], [-1, 0]], float),
    np.array([[0, np.nan], [np.nan, 0]]),
    np.zeros((2, 3)),
])
def test_graph_validation(bad):
    with pytest.raises(InvalidTopologyError):
        Graph(bad)


def test_weights_read_only():
    g = build_ring(4)
    with pytest.raises(ValueError):
        g.weights[0, 1] = 5


def test_random_connected_is_connected_and_seeded():
    a = random_connected(12, 0.3, np.random.default_rng(3))
    b = random_connected(12, 0.3, np.random.default_rng(3))
    assert is_connected(a)
    np.testing.assert_array_equal(a.weights, b.weights)


def test_edge_list_round_trip(tmp_path):
    g = from_edges(5, [(0, 1, 1.0), (1, 2, 0.25), (2, 3, 2.0), (3, 4, 1.0), (0, 4, 0.5)])
    p = tmp_path / "g.txt"
    p.write_text("# five nodes\n" + dump_edge_list(g))
    np.testing.assert_array_equal(load_edge_list(p).weights, g.weights)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 9), st.integers(0, 2**32 - 1))
def test_laplacian_properties(n, seed):
    rng = np.random.default_rng(seed)
    w = np.triu(rng.uniform(0, 2, (n, n)) * (rng.random((n, n)) < 0.6), 1)
    L = laplacian(Graph(w + w.T))
    np.testing.assert_allclose(L.sum(axis=1), 0, atol=1e-12)
    np.testing.assert_array_equal(L, L.T)
    assert np.linalg.eigvalsh(L)[0] > -1e-10
