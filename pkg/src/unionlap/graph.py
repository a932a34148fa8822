"""Epsilon-neighborhood graphs, degrees, Dirichlet energies and Laplacians.

Conventions (``n`` vertices, bandwidth ``eps``, ``W_xy = eta(|x - y| / eps)``
including the diagonal ``eta(0)``):

* ``deg(x) = (1/n) sum_y W_xy``
* normalized energy ``E(u) = 1/(n^2 eps^2) sum W_xy (u(x)/sqrt(deg x) - u(y)/sqrt(deg y))^2``
* unnormalized energy ``F(u) = 1/(n^2 eps^2) sum W_xy (u(x) - u(y))^2``

Both Laplacians are the operators of these quadratic forms in
``L^2(mu_n)``, where ``<u, v> = (1/n) sum u v``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import _neighbors
from .kernels import KernelProfile, eta_eval, parse_kernel
from .manifolds import SampleCloud


@dataclass(frozen=True)
class LaplacianKind:
    name: str
    d2: int | None = None

    def __post_init__(self):
        if self.name not in ("normalized", "unnormalized", "unnormalized_scaled"):
            raise ValueError(f"unknown Laplacian kind {self.name!r}")
        if self.name == "unnormalized_scaled":
            if self.d2 is None or self.d2 < 1:
                raise ValueError("scaled unnormalized Laplacian needs d2 >= 1")
        elif self.d2 is not None:
            raise ValueError(f"{self.name} takes no d2")

    @property
    def key(self) -> str:
        return f"unnormalized_scaled:{self.d2}" if self.d2 else self.name

    @property
    def is_normalized(self) -> bool:
        return self.name == "normalized"


NormalizedSym = LaplacianKind("normalized")
Unnormalized = LaplacianKind("unnormalized")


def UnnormalizedScaled(d2: int) -> LaplacianKind:
    return LaplacianKind("unnormalized_scaled", int(d2))


def parse_kind(key: str | LaplacianKind) -> LaplacianKind:
    if isinstance(key, LaplacianKind):
        return key
    key = key.strip().lower().replace("-", "_")
    aliases = {"normalizedsym": "normalized", "normalized_sym": "normalized", "sym": "normalized"}
    key = aliases.get(key, key)
    if key.startswith("unnormalized_scaled") or key.startswith("unnormalizedscaled"):
        _, _, d2 = key.partition(":")
        if not d2:
            raise ValueError("scaled unnormalized kind needs a dimension, e.g. 'unnormalized_scaled:2'")
        return UnnormalizedScaled(int(d2))
    return LaplacianKind(key)


@dataclass(eq=False)
class Graph:
    weights: sp.csr_matrix
    deg: np.ndarray
    epsilon: float
    profile: KernelProfile
    cloud: SampleCloud | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def row_sums(self) -> np.ndarray:
        return self.deg * self.n


def build_graph(
    cloud: SampleCloud | np.ndarray,
    epsilon: float,
    profile: KernelProfile | str = "indicator",
    method: str = "auto",
) -> Graph:
    """Weighted epsilon-graph on the cloud.

    ``method`` is ``"grid"`` (cell hashing), ``"brute"`` (all pairs) or
    ``"auto"``, which uses all pairs below 512 points.
    """
    profile = parse_kernel(profile)
    points = cloud.points if isinstance(cloud, SampleCloud) else np.asarray(cloud, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("cannot build a graph on an empty cloud")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    n = points.shape[0]
    if method == "auto":
        method = "brute" if n < 512 else "grid"
    if method == "grid":
        indptr, indices, d2 = _neighbors.radius_neighbors(points, epsilon)
    elif method == "brute":
        indptr, indices, d2 = _neighbors.brute_neighbors(points, epsilon)
    else:
        raise ValueError(f"unknown neighbor method {method!r}")
    data = eta_eval(profile, np.sqrt(d2) / epsilon)
    W = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    W.has_sorted_indices = True
    deg = np.asarray(W.sum(axis=1)).ravel() / n
    return Graph(W, deg, float(epsilon), profile, cloud if isinstance(cloud, SampleCloud) else None)


def _edge_sum(graph: Graph, f: np.ndarray) -> float:
    W = graph.weights
    rows = np.repeat(np.arange(graph.n), np.diff(W.indptr))
    diff = f[rows] - f[W.indices]
    return float(np.sum(W.data * diff * diff))


def _check_len(graph: Graph, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (graph.n,):
        raise ValueError(f"expected a vector of length {graph.n}")
    return u


def dirichlet_normalized(graph: Graph, u) -> float:
    u = _check_len(graph, u)
    return _edge_sum(graph, u / np.sqrt(graph.deg)) / (graph.n**2 * graph.epsilon**2)


def dirichlet_unnormalized(graph: Graph, u) -> float:
    u = _check_len(graph, u)
    return _edge_sum(graph, u) / (graph.n**2 * graph.epsilon**2)


def energy(graph: Graph, kind: LaplacianKind, u) -> float:
    kind = parse_kind(kind)
    if kind.is_normalized:
        return dirichlet_normalized(graph, u)
    val = dirichlet_unnormalized(graph, u)
    if kind.d2:
        val *= graph.epsilon ** (-kind.d2)
    return val


def laplacian_matrix(graph: Graph, kind: LaplacianKind | str) -> sp.csr_matrix:
    """Sparse matrix of the Laplacian of the given kind (symmetric)."""
    kind = parse_kind(kind)
    n, eps, W = graph.n, graph.epsilon, graph.weights
    if kind.is_normalized:
        s = 1.0 / np.sqrt(graph.row_sums)
        A = sp.diags(s) @ W @ sp.diags(s)
        L = (2.0 / eps**2) * (sp.identity(n, format="csr") - A)
    else:
        L = (2.0 / (n * eps**2)) * (sp.diags(graph.row_sums) - W)
        if kind.d2:
            L = L * eps ** (-kind.d2)
    L = sp.csr_matrix(L)
    L.sort_indices()
    return L


def apply_laplacian(graph: Graph, kind: LaplacianKind | str, u) -> np.ndarray:
    kind = parse_kind(kind)
    u = _check_len(graph, u)
    n, eps, W = graph.n, graph.epsilon, graph.weights
    if kind.is_normalized:
        sq = np.sqrt(graph.deg)
        return (2.0 / eps**2) * (u - (W @ (u / sq)) / (n * sq))
    out = (2.0 / (n * eps**2)) * (graph.row_sums * u - W @ u)
    if kind.d2:
        out *= eps ** (-kind.d2)
    return out


def inner(u, v) -> float:
    """Inner product of ``L^2(mu_n)``."""
    u, v = np.asarray(u, dtype=float), np.asarray(v, dtype=float)
    return float(np.dot(u, v) / u.size)


def kernel_vector(graph: Graph, kind: LaplacianKind | str) -> np.ndarray:
    kind = parse_kind(kind)
    return np.sqrt(graph.deg) if kind.is_normalized else np.ones(graph.n)


def dump_graph(graph: Graph, edges_path: str | Path, degrees_path: str | Path | None = None):
    """Write ``i j weight`` lines (upper triangle incl. diagonal) and a degree column."""
    W = sp.triu(graph.weights, format="coo")
    order = np.lexsort((W.col, W.row))
    with open(edges_path, "w", encoding="utf-8", newline="\n") as fh:
        for i, j, w in zip(W.row[order], W.col[order], W.data[order]):
            fh.write(f"{i} {j} {w!r}\n")
    if degrees_path is not None:
        np.savetxt(degrees_path, graph.deg, fmt="%.17g")


def degree_by_component(graph: Graph, labels: np.ndarray, component: int) -> np.ndarray:
    """Contribution to the degree from vertices carrying ``component``."""
    mask = (np.asarray(labels) == component).astype(float)
    return (graph.weights @ mask) / graph.n
