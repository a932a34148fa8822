"""Finite-difference reference for one-dimensional components meeting at points.

When two curves cross, the normalized limit couples them: ``v = u / sqrt(alpha rho)``
is continuous at the crossing and the weighted fluxes ``rho^2 v'`` sum to
zero there. Discretizing the weak form with midpoint coefficients and a
lumped mass gives a symmetric generalized eigenproblem in which both the
junction conditions and the Neumann conditions at free ends are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import eigsh

from ..kernels import KernelProfile, kernel_moments, parse_kernel
from ..manifolds import DegenerateIntersection, FlatPiece, MixtureModel, flat_intersection
from .reference import NORMALIZED, ReferenceSpectrum, parse_limit_kind

DENSE_MAX = 2000


class ResolutionError(ValueError):
    pass


@dataclass
class MetricGraphMesh:
    """Nodes of the discretized metric graph.

    ``nodes`` lists ``(component, coordinate)``; a junction appears once, under
    the first component that reaches it.
    """

    nodes: list[tuple[int, float]]
    edges: list[tuple[int, int, int, float, float]]  # (a, b, component, s_a, s_b)
    junctions: list[tuple[int, ...]]

    @property
    def size(self) -> int:
        return len(self.nodes)


def _junctions(model: MixtureModel, tol: float = 1e-9):
    """Shared points of 1D flat pieces as ``{(i, j): (s_i, s_j)}``."""
    comps = model.components
    found = {}
    for i in range(len(comps)):
        for j in range(i + 1, len(comps)):
            A, B = comps[i].patch, comps[j].patch
            try:
                point, frame = flat_intersection(A, B)
            except DegenerateIntersection:
                continue
            if frame.shape[0]:
                raise ValueError("overlapping collinear segments are not a metric graph")
            si = float(A.local_coords(point)[0, 0])
            sj = float(B.local_coords(point)[0, 0])
            if abs(si) <= A.lengths[0] / 2 + tol and abs(sj) <= B.lengths[0] / 2 + tol:
                found[(i, j)] = (si, sj)
    return found


def build_mesh(model: MixtureModel, h: float) -> MetricGraphMesh:
    comps = model.components
    for c in comps:
        if not isinstance(c.patch, FlatPiece) or c.dim != 1:
            raise ValueError("the metric-graph reference needs one-dimensional flat pieces")
    junc = _junctions(model)

    # breakpoints per component, each linked to a shared vertex id when it is a junction
    vertex_of: dict[tuple[int, float], int] = {}
    groups: list[list[tuple[int, float]]] = []
    for (i, j), (si, sj) in sorted(junc.items()):
        key_i, key_j = (i, round(si, 12)), (j, round(sj, 12))
        gi, gj = vertex_of.get(key_i), vertex_of.get(key_j)
        if gi is None and gj is None:
            groups.append([key_i, key_j])
            vertex_of[key_i] = vertex_of[key_j] = len(groups) - 1
        elif gi is not None and gj is None:
            groups[gi].append(key_j)
            vertex_of[key_j] = gi
        elif gj is not None and gi is None:
            groups[gj].append(key_i)
            vertex_of[key_i] = gj

    breaks = []
    for i, c in enumerate(comps):
        L = c.patch.lengths[0]
        pts = {-L / 2, L / 2}
        pts |= {s for (ci, s) in vertex_of if ci == i}
        breaks.append(sorted(pts))
    shortest = min(b - a for bp in breaks for a, b in zip(bp[:-1], bp[1:]))
    if h > shortest / 10:
        raise ResolutionError(f"grid spacing {h:g} exceeds a tenth of the shortest edge ({shortest:g})")

    nodes: list[tuple[int, float]] = []
    group_node: dict[int, int] = {}
    edges = []

    def node_for(i: int, s: float) -> int:
        g = vertex_of.get((i, round(s, 12)))
        if g is not None:
            if g not in group_node:
                group_node[g] = len(nodes)
                nodes.append((i, s))
            return group_node[g]
        nodes.append((i, s))
        return len(nodes) - 1

    for i, bp in enumerate(breaks):
        prev = node_for(i, bp[0])
        for a, b in zip(bp[:-1], bp[1:]):
            m = max(1, math.ceil((b - a) / h - 1e-9))
            grid = np.linspace(a, b, m + 1)
            for t in range(1, m + 1):
                cur = node_for(i, float(grid[t])) if t == m else len(nodes)
                if t < m:
                    nodes.append((i, float(grid[t])))
                edges.append((prev, cur, i, float(grid[t - 1]), float(grid[t])))
                prev = cur
    junctions = [tuple(g) for g in groups]
    return MetricGraphMesh(nodes, edges, junctions)


def assemble(model: MixtureModel, mesh: MetricGraphMesh, profile: KernelProfile, kind: str):
    """Stiffness and lumped mass of the weighted form on the mesh."""
    comps = model.components
    N = mesh.size
    rows, cols, vals = [], [], []
    mass = np.zeros(N)
    for a, b, i, sa, sb in mesh.edges:
        c = comps[i]
        mom = kernel_moments(profile, 1)
        length = sb - sa

        def w(s):
            return c.alpha * float(c.density.value(np.array([[s]]))[0])

        mid = w(0.5 * (sa + sb))
        if kind == NORMALIZED:
            coef = mom.ratio * mid**2 / length
            ma, mb = w(sa) ** 2, w(sb) ** 2
        else:
            coef = mom.sigma * mid**2 / length
            ma, mb = w(sa), w(sb)
        rows += [a, b, a, b]
        cols += [a, b, b, a]
        vals += [coef, coef, -coef, -coef]
        mass[a] += 0.5 * length * ma
        mass[b] += 0.5 * length * mb
    K = sp.csr_matrix((vals, (rows, cols)), shape=(N, N))
    return K, mass


def metric_graph_spectrum_fd(
    model: MixtureModel,
    profile: KernelProfile | str,
    h: float,
    k: int,
    kind: str = NORMALIZED,
    return_vectors: bool = False,
):
    """First ``k`` eigenvalues of the coupled limit problem on a metric graph.

    Normalized kind: ``-(sigma/beta) rho^-2 (rho^2 v')' = lambda v`` on each
    edge with ``rho = alpha_i rho_i``; unnormalized kind:
    ``-sigma rho^-1 (rho^2 u')' = lambda u``. Both are second order in ``h``.

    Raises
    ------
    ResolutionError
        If ``h`` exceeds a tenth of the shortest edge.
    """
    kind = parse_limit_kind(kind)
    profile = parse_kernel(profile)
    mesh = build_mesh(model, h)
    K, mass = assemble(model, mesh, profile, kind)
    N = mesh.size
    if k > N:
        raise ValueError("more eigenvalues requested than mesh nodes")
    s = 1.0 / np.sqrt(mass)
    S = sp.diags(s) @ K @ sp.diags(s)
    if N <= DENSE_MAX:
        lam, Y = eigh(S.toarray(), subset_by_index=[0, k - 1])
    else:
        # shift below zero so the factorization is regular
        lam, Y = eigsh(sp.csc_matrix(S), k=k, sigma=-1.0, which="LM", tol=1e-12)
        order = np.argsort(lam)
        lam, Y = lam[order], Y[:, order]
    lam = np.where(np.abs(lam) < 1e-10 * max(1.0, float(np.max(np.abs(lam)))), 0.0, lam)
    ref = ReferenceSpectrum(kind, (), np.asarray(lam, dtype=float), source="coupled")
    if return_vectors:
        return ref, mesh, Y * s[:, None]
    return ref
