"""Analytic reference spectra of the limiting eigenproblems.

Two limits are covered. The normalized limit lives on each component
separately (weighted Neumann problems with the ``sigma / beta`` factor); when
the larger codimension is at least two, the union spectrum is the sorted
merge of the component spectra. The rescaled unnormalized limit only sees
the highest-dimensional component, with ``sigma * alpha * rho`` in front of
the Neumann eigenvalues, plus one extra zero for the function that is
constant on each component.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..graph import Graph
from ..kernels import KernelProfile, kernel_moments, parse_kernel
from ..manifolds import (
    Circle,
    DegenerateIntersection,
    FlatPiece,
    MixtureModel,
    SampleCloud,
    flat_intersection,
)

NORMALIZED = "normalized"
UNNORMALIZED = "unnormalized"
CLUSTER_TOL = 1e-9


class UnsupportedReference(ValueError):
    """No analytic reference exists for this configuration."""


class CoupledSpectrumError(UnsupportedReference):
    """Equal dimensions meeting in codimension one; use the metric-graph solver."""


def parse_limit_kind(kind) -> str:
    name = getattr(kind, "name", kind)
    name = str(name).lower()
    if name.startswith("normalized"):
        return NORMALIZED
    if name.startswith("unnormalized"):
        return UNNORMALIZED
    raise ValueError(f"unknown limit kind {kind!r}")


@dataclass(frozen=True)
class Mode:
    """One eigenfunction of a limit problem.

    ``shape`` is ``"cos"`` (Neumann cosine product, ``index`` gives the
    wave numbers), ``"sin"`` (second circle mode), ``"global"`` (constant on
    the whole union) or ``"split"`` (constant on each component, orthogonal
    to constants). ``component`` is ``None`` for the last two.
    """

    value: float
    component: int | None
    shape: str
    index: tuple[int, ...] = ()

    @property
    def tag(self) -> str:
        if self.component is None:
            return "union"
        return f"M{self.component + 1}"


@dataclass
class ReferenceSpectrum:
    kind: str
    modes: tuple[Mode, ...] = ()
    source_values: np.ndarray | None = field(default=None, repr=False)
    source: str = "analytic"

    @property
    def values(self) -> np.ndarray:
        if self.source_values is not None:
            return np.asarray(self.source_values, dtype=float)
        return np.array([m.value for m in self.modes])

    def __len__(self) -> int:
        return self.values.size

    @property
    def entries(self) -> list[tuple[float, int, str]]:
        """``(lambda, multiplicity, source)`` with near-equal values grouped."""
        vals = self.values
        tags = [m.tag for m in self.modes] if self.modes else ["coupled"] * vals.size
        out: list[tuple[float, int, str]] = []
        start = 0
        for i in range(1, vals.size + 1):
            if i == vals.size or vals[i] - vals[i - 1] > CLUSTER_TOL * max(1.0, abs(vals[i])):
                group = sorted(set(tags[start:i]))
                out.append((float(vals[start]), i - start, "+".join(group)))
                start = i
        return out

    def piecewise_constant(self) -> list[int]:
        """Positions (0-based) of modes that are constant on every component but not globally."""
        out = []
        if not self.modes:
            return out
        comps = {m.component for m in self.modes if m.component is not None}
        for i, m in enumerate(self.modes):
            if m.shape == "split":
                out.append(i)
            elif len(comps) > 1 and m.shape == "cos" and not any(m.index) and i > 0:
                out.append(i)
        return out

    def truncate(self, k: int) -> "ReferenceSpectrum":
        sv = None if self.source_values is None else self.values[:k]
        return ReferenceSpectrum(self.kind, self.modes[:k], sv, self.source)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "source": self.source,
            "eigenvalues": [float(x) for x in self.values],
            "entries": [
                {"lambda": lam, "multiplicity": mult, "source": src} for lam, mult, src in self.entries
            ],
        }


def _flat_levels(lengths: np.ndarray, k: int) -> list[tuple[float, tuple[int, ...]]]:
    """The ``k`` smallest ``pi^2 sum (m_j / L_j)^2`` with their wave numbers."""
    # every one of the k smallest values is at most the k-th smallest single-axis value
    axis_vals = [0.0] + sorted((m / L) ** 2 for L in lengths for m in range(1, k + 1))
    cap = axis_vals[min(k, len(axis_vals)) - 1]
    ranges = [range(int(math.floor(L * math.sqrt(cap) + 1e-9)) + 1) for L in lengths]
    levels = []
    for idx in itertools.product(*ranges):
        val = math.pi**2 * sum((m / L) ** 2 for m, L in zip(idx, lengths))
        levels.append((val, idx))
    levels.sort(key=lambda t: (t[0], t[1]))
    return levels[:k]


def _component_modes(patch, factor: float, k: int, component: int) -> list[Mode]:
    if isinstance(patch, Circle):
        modes = [Mode(0.0, component, "cos", (0,))]
        m = 1
        while len(modes) < k:
            val = factor * (m / patch.radius) ** 2
            modes += [Mode(val, component, "cos", (m,)), Mode(val, component, "sin", (m,))]
            m += 1
        return modes[:k]
    return [Mode(factor * val, component, "cos", idx) for val, idx in _flat_levels(patch.lengths, k)]


def reference_spectrum_component(
    patch,
    density,
    profile: KernelProfile | str,
    k: int,
    kind: str = NORMALIZED,
    alpha: float = 1.0,
    component: int = 0,
) -> ReferenceSpectrum:
    """First ``k`` Neumann (or periodic) eigenvalues of one component's limit problem.

    Normalized: ``(sigma/beta) pi^2 sum (m_j/L_j)^2``; circle ``(sigma/beta) (m/r)^2``.
    Unnormalized: the same with ``sigma * alpha * rho`` in front. ``component``
    only tags the modes.
    """
    kind = parse_limit_kind(kind)
    if not density.is_uniform:
        raise UnsupportedReference(
            "analytic reference spectra need uniform densities; use metric_graph_spectrum_fd in 1D"
        )
    mom = kernel_moments(parse_kernel(profile), patch.dim)
    if kind == NORMALIZED:
        factor = mom.ratio
    else:
        factor = mom.sigma * alpha / patch.volume
    return ReferenceSpectrum(kind, tuple(_component_modes(patch, factor, k, component)))


def _component_reference(model: MixtureModel, i: int, profile, k: int, kind: str) -> ReferenceSpectrum:
    c = model.components[i]
    return reference_spectrum_component(c.patch, c.density, profile, k, kind, c.alpha, i)


def _sorted_modes(modes: list[Mode], k: int) -> tuple[Mode, ...]:
    order = sorted(
        range(len(modes)),
        key=lambda i: (modes[i].value, -1 if modes[i].component is None else modes[i].component, i),
    )
    return tuple(modes[i] for i in order[:k])


def _pair_geometry(model: MixtureModel, i: int, j: int):
    A, B = model.components[i].patch, model.components[j].patch
    if not (isinstance(A, FlatPiece) and isinstance(B, FlatPiece)):
        return None
    try:
        _, frame = flat_intersection(A, B)
    except DegenerateIntersection:
        return None
    return frame.shape[0]


def merged_union_spectrum(
    model: MixtureModel, profile: KernelProfile | str, kind: str = NORMALIZED, k: int = 6
) -> ReferenceSpectrum:
    """Reference spectrum of the limit problem on the whole union.

    Raises
    ------
    CoupledSpectrumError
        Two equal-dimensional components meeting in codimension one.
    UnsupportedReference
        Non-uniform densities or configurations without an analytic limit.
    """
    kind = parse_limit_kind(kind)
    K = len(model.components)
    if K == 1:
        return _component_reference(model, 0, profile, k, kind)
    dims = model.dims
    for i, j in itertools.combinations(range(K), 2):
        d12 = _pair_geometry(model, i, j)
        if d12 is None:
            continue
        if dims[i] == dims[j] == d12 + 1:
            raise CoupledSpectrumError(
                "equal dimensions meeting in codimension one couple through the intersection; "
                "use metric_graph_spectrum_fd"
            )
    if kind == NORMALIZED:
        modes = []
        for i in range(K):
            modes += list(_component_reference(model, i, profile, k, kind).modes)
        return ReferenceSpectrum(kind, _sorted_modes(modes, k))

    if K != 2 or dims[0] == dims[1]:
        raise UnsupportedReference("the unnormalized union limit is implemented for two components of different dimension")
    top = int(np.argmax(dims))
    upper = list(_component_reference(model, top, profile, max(k - 1, 1), kind).modes)
    # the constant mode of the big component becomes the split mode; constants come first
    modes = [Mode(0.0, None, "global")] + [Mode(0.0, None, "split")] + upper[1:]
    return ReferenceSpectrum(kind, tuple(modes[:k]))


# --------------------------------------------------------------------------
# reference eigenfunctions on a cloud


def _mode_shape(patch, mode: Mode, coords: np.ndarray) -> tuple[np.ndarray, float]:
    """Unnormalized mode values and the mean of their square over the patch."""
    if isinstance(patch, Circle):
        m = mode.index[0]
        phase = m * coords[:, 0] / patch.radius
        if m == 0:
            return np.ones(coords.shape[0]), 1.0
        return (np.cos(phase) if mode.shape == "cos" else np.sin(phase)), 0.5
    vals = np.ones(coords.shape[0])
    mean_sq = 1.0
    for j, (m, L) in enumerate(zip(mode.index, patch.lengths)):
        if m:
            vals = vals * np.cos(math.pi * m * (coords[:, j] + L / 2) / L)
            mean_sq *= 0.5
    return vals, mean_sq


def mode_function(model: MixtureModel, mode: Mode, component: int, coords) -> np.ndarray:
    """Values of a reference eigenfunction (unit norm in ``L^2(mu)``) on one component."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    alphas = model.alphas
    if mode.shape == "global":
        return np.ones(coords.shape[0])
    if mode.shape == "split":
        if component == 0:
            c = math.sqrt(alphas[1] / alphas[0])
        else:
            c = -math.sqrt(alphas[0] / alphas[1])
        return np.full(coords.shape[0], c)
    if mode.component != component:
        return np.zeros(coords.shape[0])
    comp = model.components[component]
    vals, mean_sq = _mode_shape(comp.patch, mode, coords)
    # uniform density: int u^2 dmu = alpha * mean_sq * c^2
    return vals / math.sqrt(comp.alpha * mean_sq)


def degree_correction(model: MixtureModel, graph: Graph, cloud: SampleCloud) -> np.ndarray:
    """``sqrt(eps^-d deg / (alpha beta rho))`` per vertex; close to 1 away from boundaries."""
    out = np.empty(cloud.n)
    for i, comp in enumerate(model.components):
        mask = cloud.labels == i
        beta = kernel_moments(graph.profile, comp.dim).beta
        rho = comp.density.value(cloud.component_coords(i, comp.dim))
        out[mask] = np.sqrt(graph.epsilon ** (-comp.dim) * graph.deg[mask] / (comp.alpha * beta * rho))
    return out


def reference_vectors(
    model: MixtureModel,
    reference: ReferenceSpectrum,
    cloud: SampleCloud,
    graph: Graph | None = None,
    k: int | None = None,
) -> np.ndarray:
    """Reference eigenfunctions sampled on the cloud, renormalized in ``L^2(mu_n)``.

    With a graph and a normalized reference, each vector is multiplied by the
    degree correction, matching what the graph eigenvectors converge to at
    finite bandwidth.
    """
    modes = reference.modes[: k or len(reference.modes)]
    if not modes:
        raise ValueError("this reference spectrum carries no analytic eigenfunctions")
    U = np.zeros((cloud.n, len(modes)))
    for i, comp in enumerate(model.components):
        mask = cloud.labels == i
        coords = cloud.component_coords(i, comp.dim)
        for j, mode in enumerate(modes):
            U[mask, j] = mode_function(model, mode, i, coords)
    if graph is not None and reference.kind == NORMALIZED:
        U *= degree_correction(model, graph, cloud)[:, None]
    norms = np.sqrt(np.mean(U**2, axis=0))
    norms[norms == 0] = 1.0
    return U / norms
