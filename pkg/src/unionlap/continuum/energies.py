"""Nonlocal and local Dirichlet energies of functions given in closed form.

The nonlocal energy at bandwidth ``eps`` is

    (1/eps^2) int int eta_eps(|x - y|) (u(x)/sqrt(c(x)) - u(y)/sqrt(c(y)))^2 dmu dmu,
    c(x) = int eta_eps(|x - z|) dmu(z),

evaluated with one quadrature node set per patch that serves both the
convolution ``c`` and the outer integrals. The local limit is

    sum_i (sigma_i / beta_i) int |grad(u / sqrt(alpha_i rho_i)) alpha_i rho_i|^2 dVol_i.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .. import _neighbors
from ..kernels import KernelProfile, kernel_moments, parse_kernel
from ..manifolds import Circle, FlatPiece, MixtureModel, flat_intersection

Fn = Callable[[np.ndarray], np.ndarray]


@dataclass
class SmoothFunctionSpec:
    """One closed-form function per component, in local patch coordinates.

    ``values[i](s)`` maps an ``(m, d_i)`` coordinate array to ``m`` values;
    ``gradients[i](s)`` returns ``(m, d_i)``. On the intersection each
    component keeps its own value (the limit energy only sees restrictions).
    """

    values: Sequence[Fn]
    gradients: Sequence[Fn | None] | None = None

    def value(self, component: int, coords: np.ndarray) -> np.ndarray:
        return np.asarray(self.values[component](np.atleast_2d(coords)), dtype=float)

    def gradient(self, component: int, coords: np.ndarray) -> np.ndarray:
        if self.gradients is None or self.gradients[component] is None:
            raise ValueError(f"no analytic gradient for component {component}")
        return np.asarray(self.gradients[component](np.atleast_2d(coords)), dtype=float)

    def ratio(self, model, component, coords, points, conv) -> np.ndarray:
        """``u / sqrt(c)`` at quadrature nodes."""
        return self.value(component, coords) / np.sqrt(conv)

    needs_convolution = True

    @classmethod
    def constant(cls, vals: Sequence[float]) -> "SmoothFunctionSpec":
        def const(v):
            return lambda s: np.full(s.shape[0], float(v))

        def zero(s):
            return np.zeros_like(s)

        return cls([const(v) for v in vals], [zero for _ in vals])


def sqrt_density_function(model: MixtureModel, scale: Sequence[float] | None = None) -> SmoothFunctionSpec:
    """``u = scale_i sqrt(alpha_i rho_i)``, which has zero limit energy."""
    scale = [1.0] * len(model.components) if scale is None else list(scale)
    vals, grads = [], []
    for c, a in zip(model.components, scale):
        def v(s, c=c, a=a):
            return a * np.sqrt(c.alpha * c.density.value(s))

        def g(s, c=c, a=a):
            rho = c.density.value(s)
            return a * math.sqrt(c.alpha) * c.density.gradient(s) / (2 * np.sqrt(rho))[:, None]

        vals.append(v)
        grads.append(g)
    return SmoothFunctionSpec(vals, grads)


# --------------------------------------------------------------------------
# quadrature nodes


@dataclass
class QuadratureNodes:
    points: np.ndarray
    coords: list[np.ndarray]
    weights: np.ndarray
    labels: np.ndarray
    spacing: float
    monte_carlo: bool


def _patch_nodes(patch, h: float, rng: np.random.Generator, mc_count: int):
    if isinstance(patch, Circle):
        m = max(8, math.ceil(patch.volume / h))
        s = (np.arange(m) + 0.5) * (patch.volume / m)
        return s[:, None], np.full(m, patch.volume / m), False
    if patch.dim <= 2:
        axes, vol = [], 1.0
        for L in patch.lengths:
            m = max(2, math.ceil(L / h))
            axes.append((np.arange(m) + 0.5) * (L / m) - L / 2)
            vol *= L / m
        grid = np.meshgrid(*axes, indexing="ij")
        s = np.column_stack([g.ravel() for g in grid])
        return s, np.full(s.shape[0], vol), False
    s = patch.uniform_coords(rng, mc_count)
    return s, np.full(mc_count, patch.volume / mc_count), True


def quadrature_nodes(model: MixtureModel, h, mc_count: int = 200_000, seed: int = 0) -> QuadratureNodes:
    """Midpoint nodes of spacing about ``h`` on every patch, weights ``alpha rho dV``.

    ``h`` is a number or one spacing per component. Patches of dimension
    three or more get Monte-Carlo nodes instead.
    """
    rng = np.random.default_rng(seed)
    hs = np.broadcast_to(np.asarray(h, dtype=float), (len(model.components),))
    pts, coords, wts, labels = [], [], [], []
    mc = False
    for i, c in enumerate(model.components):
        s, dv, is_mc = _patch_nodes(c.patch, float(hs[i]), rng, mc_count)
        mc |= is_mc
        pts.append(c.patch.embed(s))
        coords.append(s)
        wts.append(c.alpha * c.density.value(s) * dv)
        labels.append(np.full(s.shape[0], i))
    return QuadratureNodes(np.vstack(pts), coords, np.concatenate(wts), np.concatenate(labels), float(hs.max()), mc)


def _profile_code(profile: KernelProfile) -> tuple[int, float]:
    return _neighbors.KERNEL_CODES[profile.kind], float(profile.truncation or 0.0)


def convolution_at_nodes(nodes: QuadratureNodes, epsilon: float, profile: KernelProfile) -> np.ndarray:
    code, param = _profile_code(profile)
    return _neighbors.weighted_convolution(nodes.points, nodes.weights, epsilon, code, param)


# --------------------------------------------------------------------------
# nonlocal energy


# nodes per eps by patch dimension; the indicator's jump makes the midpoint
# rule first order in h / eps, and 1D patches are cheap to resolve finely
RESOLUTION_BY_DIM = {1: 128.0, 2: 8.0}


@dataclass
class NonlocalResult:
    value: float
    error_estimate: float
    nodes: int
    spacing: tuple[float, ...]
    fine_value: float
    coarse_value: float
    warning: str | None = None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "fine_value": self.fine_value,
            "error_estimate": self.error_estimate,
            "nodes": self.nodes,
            "spacing": list(self.spacing),
            "coarse_value": self.coarse_value,
            "warning": self.warning,
        }


def _nonlocal_once(model, u, epsilon, profile, hs, mc_count, seed):
    nodes = quadrature_nodes(model, hs, mc_count, seed)
    conv = convolution_at_nodes(nodes, epsilon, profile) if u.needs_convolution else None
    f = np.empty(nodes.points.shape[0])
    for i in range(len(model.components)):
        mask = nodes.labels == i
        f[mask] = u.ratio(model, i, nodes.coords[i], nodes.points[mask], None if conv is None else conv[mask])
    code, param = _profile_code(profile)
    total = _neighbors.weighted_pair_energy(nodes.points, nodes.weights, f, epsilon, code, param)
    return total / epsilon**2, nodes.points.shape[0]


def _node_count(model: MixtureModel, hs, mc_count: int) -> int:
    total = 0
    for c, h in zip(model.components, hs):
        if isinstance(c.patch, Circle):
            total += max(8, math.ceil(c.patch.volume / h))
        elif c.dim <= 2:
            total += int(np.prod([max(2, math.ceil(L / h)) for L in c.patch.lengths]))
        else:
            total += mc_count
    return total


def nonlocal_energy(
    model: MixtureModel,
    u,
    epsilon: float,
    profile: KernelProfile | str = "indicator",
    resolution: float | None = None,
    max_nodes: int = 6_000_000,
    rtol: float | None = None,
    mc_count: int = 200_000,
    seed: int = 0,
    extrapolate: bool = True,
) -> NonlocalResult:
    """Nonlocal energy by midpoint quadrature with ``resolution`` nodes per ``eps``.

    ``u`` is a :class:`SmoothFunctionSpec` or a degree-corrected function
    (see :mod:`.recovery`). By default the resolution depends on the patch
    dimension (:data:`RESOLUTION_BY_DIM`). A second evaluation at twice the
    spacing gives the error estimate ``|E_h - E_2h|``; since a kernel with a
    jump makes the rule first order, ``value`` is the Richardson combination
    ``2 E_h - E_2h`` unless ``extrapolate`` is false. If the node budget forces
    a coarser spacing, or the estimate exceeds ``rtol`` (relative), the
    result carries a warning.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    profile = parse_kernel(profile)
    if resolution is None:
        hs = [epsilon / RESOLUTION_BY_DIM.get(c.dim, 8.0) for c in model.components]
    else:
        hs = [epsilon / resolution] * len(model.components)
    hs = np.array(hs)
    warning = None
    requested = hs.copy()
    while _node_count(model, hs, mc_count) > max_nodes:
        hs *= 1.25
    if np.any(hs > requested):
        warning = f"node budget forced spacing {hs.max():.3g} (requested {requested.max():.3g})"
    fine, n_nodes = _nonlocal_once(model, u, epsilon, profile, hs, mc_count, seed)
    coarse, _ = _nonlocal_once(model, u, epsilon, profile, 2 * hs, mc_count, seed + 1)
    err = abs(fine - coarse)
    value = 2 * fine - coarse if extrapolate else fine
    if rtol is not None and err > rtol * max(abs(value), 1e-300):
        msg = f"estimated quadrature error {err:.3g} exceeds the requested tolerance"
        warning = msg if warning is None else warning + "; " + msg
    if warning:
        warnings.warn(warning, stacklevel=2)
    return NonlocalResult(
        float(value), float(err), n_nodes, tuple(float(h) for h in hs), float(fine), float(coarse), warning
    )


# --------------------------------------------------------------------------
# local limit energy


def _gauss_box(lengths: np.ndarray, q: int):
    x, w = np.polynomial.legendre.leggauss(q)
    axes = [(x * L / 2, w * L / 2) for L in lengths]
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    s = np.column_stack([g.ravel() for g in grids])
    wt = np.prod(np.column_stack([g.ravel() for g in wgrids]), axis=1)
    return s, wt


def patch_quadrature(patch, q: int = 64):
    """High-order rule on a patch: tensor Gauss-Legendre, or trapezoid on a circle."""
    if isinstance(patch, Circle):
        m = 8 * q
        s = np.arange(m) * (patch.volume / m)
        return s[:, None], np.full(m, patch.volume / m)
    return _gauss_box(patch.lengths, q if patch.dim <= 2 else max(8, q // 4))


def _traces_match(model: MixtureModel, u: SmoothFunctionSpec, tol: float) -> bool:
    dims = model.dims
    if len(model.components) != 2:
        return True
    A, B = (c.patch for c in model.components)
    if not (isinstance(A, FlatPiece) and isinstance(B, FlatPiece)):
        return True
    try:
        point, frame = flat_intersection(A, B)
    except Exception:
        return True
    if not dims[0] == dims[1] == frame.shape[0] + 1:
        return True
    # sample the intersection inside both boxes
    ts = np.linspace(-0.5, 0.5, 9) if frame.shape[0] else np.zeros(1)
    vals = []
    for t in ts:
        x = point + (t * frame.sum(axis=0) if frame.shape[0] else 0.0)
        row = []
        for i, c in enumerate(model.components):
            s = c.patch.local_coords(x)
            if not np.all(c.patch.contains(s, 1e-9)):
                break
            rho = c.alpha * c.density.value(s)
            row.append(float(u.value(i, s)[0] / np.sqrt(rho[0])))
        if len(row) == 2:
            vals.append(row)
    vals = np.array(vals)
    if vals.size == 0:
        return True
    scale = max(1.0, float(np.max(np.abs(vals))))
    return bool(np.all(np.abs(vals[:, 0] - vals[:, 1]) <= tol * scale))


def limit_energy(
    model: MixtureModel,
    u: SmoothFunctionSpec,
    profile: KernelProfile | str = "indicator",
    q: int = 64,
    trace_tol: float = 1e-9,
) -> float:
    """Local limit energy; ``inf`` when a codimension-one trace mismatch rules ``u`` out."""
    profile = parse_kernel(profile)
    if not _traces_match(model, u, trace_tol):
        return math.inf
    total = 0.0
    for i, c in enumerate(model.components):
        s, w = patch_quadrature(c.patch, q)
        rho = c.density.value(s)
        grho = c.density.gradient(s)
        val = u.value(i, s)
        grad = u.gradient(i, s)
        # |grad(u / sqrt(a rho)) a rho|^2 = a rho |grad u - u grad rho / (2 rho)|^2
        inner = grad - (val / (2 * rho))[:, None] * grho
        integrand = c.alpha * rho * np.sum(inner**2, axis=1)
        total += kernel_moments(profile, c.dim).ratio * float(np.dot(w, integrand))
    return total


def l2_norm_sq(model: MixtureModel, u: SmoothFunctionSpec, q: int = 64) -> float:
    """``int u^2 dmu``."""
    total = 0.0
    for i, c in enumerate(model.components):
        s, w = patch_quadrature(c.patch, q)
        total += c.alpha * float(np.dot(w, c.density.value(s) * u.value(i, s) ** 2))
    return total


# --------------------------------------------------------------------------
# logarithmic layer


def interpolation_weight(d, epsilon: float) -> np.ndarray:
    """Log weight: 1 at ``d <= eps``, 0 at ``d >= sqrt(eps)``."""
    d = np.asarray(d, dtype=float)
    le = math.log(epsilon)
    with np.errstate(divide="ignore"):
        w = (0.5 * le - np.log(d)) / (0.5 * le - le)
    return np.clip(w, 0.0, 1.0)


@dataclass(frozen=True)
class LogLayer:
    epsilon: float
    closed_form: float
    quadrature: float

    @property
    def relative_gap(self) -> float:
        return abs(self.quadrature - self.closed_form) / self.closed_form


def log_layer_energy(epsilon: float, n_radial: int = 400, n_angular: int = 64) -> LogLayer:
    """Dirichlet integral of the log interpolation on the annulus ``eps <= |x| <= sqrt(eps)``.

    The closed form is ``4 pi / |log eps|``. The quadrature uses Gauss-Legendre
    in ``log r`` and the trapezoid rule in angle on a central-difference
    gradient of the interpolation weight, so it does not lean on the closed form.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    closed = 4.0 * math.pi / abs(math.log(epsilon))
    lo, hi = math.log(epsilon), 0.5 * math.log(epsilon)
    x, w = np.polynomial.legendre.leggauss(n_radial)
    t = lo + (x + 1) * (hi - lo) / 2
    wt = w * (hi - lo) / 2
    r = np.exp(t)
    phi = np.arange(n_angular) * (2 * math.pi / n_angular)
    R, P = np.meshgrid(r, phi, indexing="ij")
    X, Y = R * np.cos(P), R * np.sin(P)

    def weight(px, py):
        return interpolation_weight(np.hypot(px, py), epsilon)

    step = 1e-6 * R
    gx = (weight(X + step, Y) - weight(X - step, Y)) / (2 * step)
    gy = (weight(X, Y + step) - weight(X, Y - step)) / (2 * step)
    # dx = r dr dphi = r^2 dt dphi
    integrand = (gx**2 + gy**2) * R**2
    quad = float(np.sum(integrand.mean(axis=1) * 2 * math.pi * wt))
    return LogLayer(float(epsilon), closed, quad)
