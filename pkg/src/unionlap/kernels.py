"""Radial weight profiles and their dimension-indexed moments.

Every profile is supported on exactly ``[0, 1]``; the graph bandwidth is the
support radius. Profiles are selected by string key:

``"indicator"``
    ``eta(t) = 1`` on ``[0, 1]``.
``"triangular"``
    ``eta(t) = 1 - t`` on ``[0, 1]``.
``"gauss:<r_t>"``
    ``eta(t) = exp(-(r_t t)^2 / 2)`` on ``[0, 1]``, i.e. a unit-variance
    Gaussian truncated at radius ``r_t`` and rescaled to unit support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

KINDS = ("indicator", "triangular", "gauss")


@dataclass(frozen=True)
class KernelProfile:
    kind: str
    truncation: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "gauss":
            if self.truncation is None or not self.truncation > 0:
                raise ValueError("gauss profile needs a positive truncation radius")
        elif self.truncation is not None:
            raise ValueError(f"{self.kind} profile takes no truncation radius")

    @property
    def key(self) -> str:
        if self.kind == "gauss":
            return f"gauss:{self.truncation:g}"
        return self.kind

    def __call__(self, t):
        return eta_eval(self, t)


@dataclass(frozen=True)
class Moments:
    dimension: int
    sigma: float
    beta: float

    @property
    def ratio(self) -> float:
        return self.sigma / self.beta


def parse_kernel(key: str | KernelProfile) -> KernelProfile:
    """Build a profile from its config key (``indicator``, ``triangular``, ``gauss:3``)."""
    if isinstance(key, KernelProfile):
        return key
    key = key.strip().lower()
    if key.startswith("gauss"):
        _, _, radius = key.partition(":")
        if not radius:
            raise ValueError("gauss kernel key must carry a radius, e.g. 'gauss:3'")
        return KernelProfile("gauss", float(radius))
    return KernelProfile(key)


def eta_eval(profile: KernelProfile, t):
    """Evaluate the profile at ``t >= 0``; scalars in, scalars out.

    Raises
    ------
    ValueError
        If any ``t`` is negative.
    """
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ValueError("eta is defined on [0, inf); got a negative argument")
    inside = arr <= 1.0
    if profile.kind == "indicator":
        out = np.where(inside, 1.0, 0.0)
    elif profile.kind == "triangular":
        out = np.where(inside, 1.0 - arr, 0.0)
    else:
        r = profile.truncation
        out = np.where(inside, np.exp(-0.5 * (r * arr) ** 2), 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1} in R^d."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


@lru_cache(maxsize=None)
def _moments_cached(kind: str, truncation: float | None, d: int) -> tuple[float, float]:
    if kind == "indicator":
        beta = ball_volume(d)
        return beta / (d + 2), beta
    profile = KernelProfile(kind, truncation)

    def radial(power):
        val, _ = integrate.quad(
            lambda r: eta_eval(profile, r) * r**power, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200
        )
        return val

    area = sphere_area(d)
    # sigma = |S^{d-1}| / d * int_0^1 eta(r) r^{d+1} dr (by symmetry |x_1|^2 averages to r^2/d)
    sigma = area / d * radial(d + 1)
    beta = area * radial(d - 1)
    return sigma, beta


def kernel_moments(profile: KernelProfile | str, d: int) -> Moments:
    """Second moment ``sigma`` and mass ``beta`` of ``eta(|x|)`` over ``R^d``."""
    profile = parse_kernel(profile)
    if d < 1:
        raise ValueError("dimension must be a positive integer")
    sigma, beta = _moments_cached(profile.kind, profile.truncation, int(d))
    return Moments(int(d), sigma, beta)
