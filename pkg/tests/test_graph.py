from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from unionlap import _neighbors
from unionlap.graph import (
    apply_laplacian,
    build_graph,
    degree_by_component,
    dirichlet_normalized,
    dirichlet_unnormalized,
    energy,
    inner,
    kernel_vector,
    laplacian_matrix,
    parse_kind,
)
from unionlap.manifolds import sample_mixture

KINDS = ["normalized", "unnormalized", "unnormalized_scaled:2"]


def _dense_energy(graph, u, normalized):
    # direct double sum, written independently of the library formula
    W = graph.weights.toarray()
    n, eps = graph.n, graph.epsilon
    f = u / np.sqrt(W.sum(axis=1) / n) if normalized else u
    return float(np.sum(W * (f[:, None] - f[None, :]) ** 2)) / (n**2 * eps**2)


def test_grid_adjacency_equals_all_pairs(paper_model):
    cloud = sample_mixture(paper_model, 5400, 1, counts=(2600, 2800)).subsample(np.arange(0, 5400, 10)[:512])
    grid = build_graph(cloud, 0.13, method="grid").weights
    brute = build_graph(cloud, 0.13, method="brute").weights
    assert (grid != brute).nnz == 0


def test_closed_ball_includes_boundary_pairs():
    pts = np.array([[0.0], [0.25], [0.5]])
    W = build_graph(pts, 0.25, method="grid").weights.toarray()
    assert W[0, 1] == 1 and W[1, 2] == 1 and W[0, 2] == 0
    assert np.all(np.diag(W) == 1)


def test_degree_is_row_sum_over_n(small_paper_graph):
    g = small_paper_graph
    assert np.allclose(g.deg, np.asarray(g.weights.sum(axis=1)).ravel() / g.n)
    parts = sum(degree_by_component(g, g.cloud.labels, i) for i in range(2))
    assert np.allclose(parts, g.deg)


@pytest.mark.parametrize("kind", KINDS)
def test_matrix_is_symmetric_and_kills_kernel_vector(small_paper_graph, kind):
    L = laplacian_matrix(small_paper_graph, kind)
    assert abs(L - L.T).max() < 1e-12
    q = kernel_vector(small_paper_graph, kind)
    assert np.max(np.abs(L @ q)) < 1e-9 * np.max(np.abs(L.data))


@pytest.mark.parametrize("kind", KINDS)
def test_matrix_free_apply_matches_matrix(small_paper_graph, kind, rng):
    g = small_paper_graph
    u = rng.standard_normal(g.n)
    assert np.allclose(apply_laplacian(g, kind, u), laplacian_matrix(g, kind) @ u, rtol=1e-12, atol=1e-9)


def test_energy_matches_dense_double_sum(small_paper_graph, rng):
    g = small_paper_graph
    u = rng.standard_normal(g.n)
    assert dirichlet_normalized(g, u) == pytest.approx(_dense_energy(g, u, True), rel=1e-12)
    assert dirichlet_unnormalized(g, u) == pytest.approx(_dense_energy(g, u, False), rel=1e-12)


def test_quadratic_form_identity_random_instances(paper_model):
    # <u, L u> in L^2(mu_n) equals the energy, for all three kinds
    rng = np.random.default_rng(5)
    for t in range(100):
        n = int(rng.integers(30, 120))
        cloud = sample_mixture(paper_model, n, 1000 + t)
        g = build_graph(cloud, float(rng.uniform(0.2, 0.6)), ["indicator", "triangular", "gauss:2"][t % 3])
        kind = KINDS[t % 3]
        u = rng.standard_normal(n)
        L = laplacian_matrix(g, kind)
        lhs = inner(u, L @ u)
        rhs = energy(g, kind, u)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


@given(seed=st.integers(0, 10_000), eps=st.floats(0.05, 0.5))
@settings(max_examples=25, deadline=None)
def test_grid_hash_matches_brute_force_property(seed, eps):
    X = np.random.default_rng(seed).random((200, 3))
    a = _neighbors.radius_neighbors(X, eps)
    b = _neighbors.brute_neighbors(X, eps)
    assert np.array_equal(a[0], b[0])
    assert np.array_equal(a[1], b[1])
    assert np.allclose(a[2], b[2])


def test_energy_rejects_wrong_length(small_paper_graph):
    with pytest.raises(ValueError):
        dirichlet_normalized(small_paper_graph, np.ones(3))
    with pytest.raises(ValueError):
        build_graph(np.zeros((0, 2)), 0.1)
    with pytest.raises(ValueError):
        parse_kind("unnormalized_scaled")


def test_weights_sparse_type(small_paper_graph):
    assert sp.isspmatrix_csr(small_paper_graph.weights) or isinstance(small_paper_graph.weights, sp.csr_array)
