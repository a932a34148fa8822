"""Degree-corrected functions and the logarithmic recovery construction.

A function ``u`` is stored through ``f = u / sqrt(c)`` with ``c = eta_eps * mu``.
"Degree-corrected" means ``f = v / sqrt(eps^d alpha beta rho)`` on a
component of dimension ``d``: then ``u`` is ``v`` up to the ratio
``c / (eps^d alpha beta rho)``, which tends to one away from boundaries and
intersections, and the convolution drops out of the nonlocal energy.

The recovery function on the higher-dimensional component takes the value of
``u1`` at the intersection within distance ``eps``, the value of ``u2``
beyond ``sqrt(eps)``, and interpolates with the weight
``(log sqrt(eps) - log d) / (log sqrt(eps) - log eps)`` in between.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..kernels import KernelProfile, kernel_moments, parse_kernel
from ..manifolds import FlatPiece, Intersection, MixtureModel, model_intersection
from .energies import SmoothFunctionSpec, interpolation_weight

NEAR, MID, FAR = 0, 1, 2


class RecoveryError(ValueError):
    pass


def _as_callable(u, component: int) -> Callable:
    if isinstance(u, SmoothFunctionSpec):
        return lambda s: u.value(component, s)
    if callable(u):
        return lambda s: np.asarray(u(np.atleast_2d(s)), dtype=float)
    return lambda s: np.full(np.atleast_2d(s).shape[0], float(u))


@dataclass
class DegreeCorrected:
    """``f = v_i / sqrt(eps^d_i alpha_i beta_i rho_i)`` on component ``i``."""

    model: MixtureModel
    values: SmoothFunctionSpec
    epsilon: float
    profile: KernelProfile

    needs_convolution = False

    def scale(self, component: int, coords) -> np.ndarray:
        c = self.model.components[component]
        beta = kernel_moments(self.profile, c.dim).beta
        rho = c.density.value(np.atleast_2d(coords))
        return 1.0 / np.sqrt(self.epsilon**c.dim * c.alpha * beta * rho)

    def ratio(self, model, component, coords, points, conv) -> np.ndarray:
        return self.values.value(component, coords) * self.scale(component, coords)

    def evaluate(self, component: int, coords, conv) -> np.ndarray:
        return self.ratio(self.model, component, coords, None, None) * np.sqrt(conv)


def piecewise_constant(model: MixtureModel, levels, epsilon: float, profile="indicator") -> DegreeCorrected:
    """Degree-corrected function equal to ``levels[i]`` on component ``i``."""
    return DegreeCorrected(model, SmoothFunctionSpec.constant(levels), epsilon, parse_kernel(profile))


@dataclass
class RecoveryFunction:
    model: MixtureModel
    u1: Callable
    u2: Callable
    epsilon: float
    profile: KernelProfile
    low: int
    high: int
    intersection: Intersection
    region_constant: float

    needs_convolution = False

    def distance(self, points) -> np.ndarray:
        return self.intersection.distance(points)

    def region(self, points) -> np.ndarray:
        """0 (near), 1 (mid) or 2 (far) for points on the higher-dimensional component."""
        d = self.distance(points)
        out = np.full(d.size, FAR)
        out[d < math.sqrt(self.epsilon)] = MID
        out[d < self.epsilon] = NEAR
        return out

    def weight(self, points) -> np.ndarray:
        return interpolation_weight(self.distance(points), self.epsilon)

    def _scale(self, component: int, coords) -> np.ndarray:
        c = self.model.components[component]
        beta = kernel_moments(self.profile, c.dim).beta
        rho = c.density.value(np.atleast_2d(coords))
        return 1.0 / np.sqrt(self.epsilon**c.dim * c.alpha * beta * rho)

    def ratio(self, model, component, coords, points, conv) -> np.ndarray:
        coords = np.atleast_2d(coords)
        lowp = self.model.components[self.low].patch
        if component == self.low:
            return self.u1(coords) * self._scale(self.low, coords)
        if component != self.high:
            raise ValueError("recovery functions live on two components")
        highp = self.model.components[self.high].patch
        if points is None:
            points = highp.embed(coords)
        far = self.u2(coords) * self._scale(self.high, coords)
        s1 = lowp.local_coords(self.intersection.project(points))
        near = self.u1(s1) * self._scale(self.low, s1)
        w = self.weight(points)
        return far + w * (near - far)

    def evaluate(self, component: int, coords, conv, points=None) -> np.ndarray:
        """``u`` itself, given the convolution ``c`` at the same points."""
        return self.ratio(self.model, component, coords, points, None) * np.sqrt(conv)


def _layer_room(patch: FlatPiece, inter: Intersection) -> float:
    """Distance from the intersection to the patch boundary, across the intersection."""
    s0 = patch.local_coords(inter.point)[0]
    room = math.inf
    for j in range(patch.dim):
        axis = patch.frame[j]
        along = np.linalg.norm(inter.frame @ axis) if inter.dim else 0.0
        if along < 1 - 1e-9:
            room = min(room, patch.lengths[j] / 2 - abs(s0[j]))
    return room


def build_recovery(
    model: MixtureModel,
    u1,
    u2,
    epsilon: float,
    profile: KernelProfile | str = "indicator",
) -> RecoveryFunction:
    """Logarithmic recovery function for a lower-dimensional piece piercing a higher one.

    ``u1`` lives on the lower-dimensional component and ``u2`` on the other;
    each may be a callable on local coordinates, a constant, or a
    :class:`SmoothFunctionSpec` (its entry for that component is used).

    Raises
    ------
    RecoveryError
        If the codimensions are outside ``d1 - d12 <= 2 <= d2 - d12``, or if
        ``eps`` is too large: the interaction band ``C eps`` with
        ``C = 2 / sin(theta)`` must sit inside the layer, and the layer of
        radius ``sqrt(eps)`` must fit inside the higher-dimensional patch.
    """
    if len(model.components) != 2:
        raise RecoveryError("the recovery construction needs exactly two components")
    if not 0 < epsilon < 1:
        raise RecoveryError("epsilon must lie in (0, 1)")
    dims = model.dims
    low = 0 if dims[0] <= dims[1] else 1
    high = 1 - low
    inter = model_intersection(model, low, high)
    d12 = inter.dim
    if not (dims[low] - d12 <= 2 <= dims[high] - d12):
        raise RecoveryError("recovery layer needs d1 - d12 <= 2 <= d2 - d12")
    C = 2.0 / math.sin(inter.angle)
    if C * epsilon >= math.sqrt(epsilon):
        raise RecoveryError(f"eps={epsilon:g} too large: interaction band C*eps={C * epsilon:.3g} >= sqrt(eps)")
    room = _layer_room(model.components[high].patch, inter)
    if math.sqrt(epsilon) >= room:
        raise RecoveryError(f"eps={epsilon:g} too large: layer radius sqrt(eps) reaches the patch boundary")
    return RecoveryFunction(
        model,
        _as_callable(u1, low),
        _as_callable(u2, high),
        float(epsilon),
        parse_kernel(profile),
        low,
        high,
        inter,
        C,
    )
