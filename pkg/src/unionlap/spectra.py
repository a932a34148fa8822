"""Smallest eigenpairs of graph Laplacians and alignment with reference spectra."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .graph import Graph, LaplacianKind, kernel_vector, laplacian_matrix, parse_kind
from .manifolds import SampleCloud

log = logging.getLogger(__name__)

DENSE_MAX = 512
SEPARATION_CAP = 1e6


class SolverError(RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


@dataclass(eq=False)
class SpectralResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    kind: LaplacianKind
    method: str = "arpack"

    @property
    def k(self) -> int:
        return self.eigenvalues.size

    def summary(self) -> dict:
        return {
            "kind": self.kind.key,
            "method": self.method,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residuals": [float(x) for x in self.residuals],
        }


def _fix_sign(V: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def _finish(L, lam, V, kind, method) -> SpectralResult:
    n = V.shape[0]
    order = np.argsort(lam, kind="stable")
    lam, V = lam[order], V[:, order]
    V = V / np.linalg.norm(V, axis=0) * np.sqrt(n)
    V = _fix_sign(V)
    R = L @ V - V * lam
    res = np.linalg.norm(R, axis=0) / np.linalg.norm(V, axis=0)
    return SpectralResult(lam, V, res, kind, method)


def _start_vector(n: int, q: np.ndarray) -> np.ndarray:
    v = np.cos(0.7 * np.arange(n) + 0.3) + 1.0
    return v - q * (q @ v)


def smallest_eigenpairs(
    graph: Graph,
    kind: LaplacianKind | str,
    k: int,
    tol: float = 1e-8,
    method: str = "auto",
    maxiter: int | None = None,
) -> SpectralResult:
    """The ``k`` smallest eigenpairs, eigenvectors normalized in ``L^2(mu_n)``.

    Up to 512 vertices (or with ``method="dense"``) the full dense matrix is
    diagonalized. Otherwise implicitly restarted Lanczos (ARPACK) runs on the
    complement of the known kernel vector, which is then prepended.
    """
    kind = parse_kind(kind)
    n = graph.n
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n")
    ncomp, _ = connected_components(graph.weights, directed=False)
    if ncomp > 1:
        warnings.warn(f"graph has {ncomp} connected components at eps={graph.epsilon:g}", stacklevel=2)
    L = laplacian_matrix(graph, kind)
    if method == "auto":
        method = "dense" if n <= DENSE_MAX else "arpack"
    if method == "dense":
        lam, V = np.linalg.eigh(L.toarray())
        return _finish(L, lam[:k], V[:, :k], kind, "dense")
    if method != "arpack":
        raise ValueError(f"unknown eigensolver method {method!r}")

    q = kernel_vector(graph, kind)
    q = q / np.linalg.norm(q)
    if k == 1:
        return _finish(L, np.zeros(1), q[:, None], kind, "kernel")

    eps = graph.epsilon
    if kind.is_normalized:
        s = 1.0 / np.sqrt(graph.row_sums)
        A = sp.csr_matrix(sp.diags(s) @ graph.weights @ sp.diags(s))
        shift, scale = 1.0, 2.0 / eps**2
        B = A
    else:
        # largest eigenvalues of shift*I - L; Gershgorin bounds the spectrum of L
        diag = L.diagonal()
        shift = float(2.0 * diag.max())
        scale = 1.0
        B = None

    def matvec(x):
        x = np.asarray(x).ravel()
        x = x - q * (q @ x)
        y = B @ x if B is not None else shift * x - L @ x
        return y - q * (q @ y)

    op = LinearOperator((n, n), matvec=matvec, dtype=float)
    ncv = min(n - 1, max(2 * k + 1, 24))
    arpack_tol = tol / (scale * max(shift, 1.0))
    try:
        mu, V = eigsh(op, k=k - 1, which="LA", tol=arpack_tol, ncv=ncv,
                      v0=_start_vector(n, q), maxiter=maxiter or max(1000, 200 * k))
    except ArpackNoConvergence as exc:
        raise SolverError(f"Lanczos did not converge: {len(exc.eigenvalues)} of {k - 1} pairs") from exc
    lam = scale * (shift - mu)
    lam = np.concatenate([[0.0], lam])
    V = np.column_stack([q, V])
    res = _finish(L, lam, V, kind, "arpack")
    bound = tol * max(1.0, float(np.max(np.abs(res.eigenvalues))))
    if np.any(res.residuals > 100 * bound):
        raise SolverError("residuals exceed tolerance", res.residuals)
    return res


# --------------------------------------------------------------------------
# alignment


@dataclass
class AlignmentReport:
    pairs: list[tuple[float, float, float]]
    cluster_angles: list[dict] = field(default_factory=list)
    separation: dict[int, float] = field(default_factory=dict)
    flagged: list[int] = field(default_factory=list)

    @property
    def relative_errors(self) -> np.ndarray:
        return np.array([p[2] for p in self.pairs])

    def to_dict(self) -> dict:
        return {
            "pairs": [
                {"index": i + 1, "computed": c, "reference": r, "relative_error": e}
                for i, (c, r, e) in enumerate(self.pairs)
            ],
            "cluster_angles": self.cluster_angles,
            "separation": {str(k): v for k, v in self.separation.items()},
            "piecewise_constant": self.flagged,
        }


def separation_score(u, labels, a: int = 0, b: int = 1) -> float:
    """``|mean(u on a) - mean(u on b)|`` over the pooled standard deviation, capped."""
    u = np.asarray(u, dtype=float)
    labels = np.asarray(labels)
    ua, ub = u[labels == a], u[labels == b]
    if ua.size < 2 or ub.size < 2:
        raise ValueError("each group needs at least two samples")
    pooled = ((ua.size - 1) * ua.var(ddof=1) + (ub.size - 1) * ub.var(ddof=1)) / (ua.size + ub.size - 2)
    gap = abs(ua.mean() - ub.mean())
    sd = np.sqrt(pooled)
    if sd == 0 or gap / sd > SEPARATION_CAP:
        return SEPARATION_CAP if gap > 0 else 0.0
    return float(gap / sd)


def variance_fraction(u, labels, component: int = 0) -> float:
    """Share of the total sum of squares coming from variation within one component."""
    u = np.asarray(u, dtype=float)
    part = u[np.asarray(labels) == component]
    total = np.sum((u - u.mean()) ** 2)
    if total == 0:
        return 0.0
    return float(np.sum((part - part.mean()) ** 2) / total)


def align_spectra(
    result: SpectralResult,
    reference,
    cloud: SampleCloud | None = None,
    reference_vectors: np.ndarray | None = None,
    cluster_tol: float = 1e-9,
) -> AlignmentReport:
    """Pair computed and reference eigenvalues in order and score the eigenvectors.

    Relative errors use ``max(lambda_ref, lambda_ref[3])`` in the denominator
    so that reference zeros do not blow up. When ``reference_vectors`` (the
    reference eigenfunctions sampled on the cloud) are given, multiplicity
    clusters are compared through principal angles between subspaces.
    """
    ref = np.asarray(reference.values if hasattr(reference, "values") else reference, dtype=float)
    k = result.k
    if k > ref.size:
        raise ValueError("reference spectrum shorter than the computed one")
    ref = ref[:k]
    positive = ref[ref > cluster_tol]
    floor = ref[2] if ref.size > 2 else (positive[0] if positive.size else 1.0)
    if floor <= 0:
        floor = positive[0] if positive.size else 1.0
    pairs = []
    for lam_c, lam_r in zip(result.eigenvalues, ref):
        pairs.append((float(lam_c), float(lam_r), float(abs(lam_c - lam_r) / max(lam_r, floor))))

    clusters = []
    start = 0
    for i in range(1, k + 1):
        if i == k or ref[i] - ref[i - 1] > cluster_tol * max(1.0, abs(ref[i])):
            if i - start > 1:
                clusters.append((start, i))
            start = i
    cluster_angles = []
    if reference_vectors is not None:
        R = np.asarray(reference_vectors)[:, :k]
        for a, b in clusters:
            ang = sla.subspace_angles(result.eigenvectors[:, a:b], R[:, a:b])
            cluster_angles.append({"indices": list(range(a + 1, b + 1)), "angles": [float(x) for x in ang]})

    flagged = []
    if hasattr(reference, "piecewise_constant"):
        flagged = [i + 1 for i in reference.piecewise_constant() if i < k]
    separation = {}
    if cloud is not None and len(cloud.counts) > 1:
        for j in range(k):
            separation[j + 1] = separation_score(result.eigenvectors[:, j], cloud.labels)
    return AlignmentReport(pairs, cluster_angles, separation, flagged)


def align_sign(u, ref) -> np.ndarray:
    """Flip ``u`` so that its ``L^2(mu_n)`` inner product with ``ref`` is nonnegative."""
    u = np.asarray(u, dtype=float)
    return u if np.dot(u, ref) >= 0 else -u


def procrustes_align(U: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Rotate the columns of ``U`` (a multiplicity cluster) to best match ``R``."""
    M = U.T @ R
    P, _, Qt = np.linalg.svd(M)
    return U @ (P @ Qt)
